#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace phtmpc {

/// Append-only list of timestamped records. Every record is a JSON object
/// with at least "t" (s) and "ch" (channel name).
class RunLog {
 public:
  /// Throws std::logic_error if `t` precedes the last record of the channel.
  void append(const std::string& channel, double t, nlohmann::json fields = nlohmann::json::object());

  const std::vector<nlohmann::json>& records() const { return records_; }
  std::vector<const nlohmann::json*> channel(const std::string& name) const;
  size_t size() const { return records_.size(); }

  /// One record per line.
  std::string to_jsonl() const;
  void write(const std::string& path) const;
  static RunLog parse(const std::string& text);
  static RunLog read(const std::string& path);

 private:
  std::vector<nlohmann::json> records_;
  std::map<std::string, double> last_;
};

}  // namespace phtmpc
