#include "phtmpc/scenario/run_log.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "phtmpc/errors.hpp"

namespace phtmpc {

void RunLog::append(const std::string& channel, double t, nlohmann::json fields) {
  auto it = last_.find(channel);
  if (it != last_.end() && t < it->second) {
    throw std::logic_error("run log: non-monotone time on channel '" + channel + "'");
  }
  last_[channel] = t;
  fields["t"] = t;
  fields["ch"] = channel;
  records_.push_back(std::move(fields));
}

std::vector<const nlohmann::json*> RunLog::channel(const std::string& name) const {
  std::vector<const nlohmann::json*> out;
  for (const auto& r : records_) {
    if (r.at("ch") == name) out.push_back(&r);
  }
  return out;
}

std::string RunLog::to_jsonl() const {
  std::string out;
  for (const auto& r : records_) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

void RunLog::write(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << to_jsonl();
}

RunLog RunLog::parse(const std::string& text) {
  RunLog log;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("run log line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("t") || !j.contains("ch") || !j["t"].is_number() || !j["ch"].is_string()) {
      throw ConfigError("run log line " + std::to_string(lineno) + ": record needs numeric 't' and string 'ch'");
    }
    const double t = j["t"].get<double>();
    const std::string ch = j["ch"].get<std::string>();
    try {
      log.append(ch, t, std::move(j));
    } catch (const std::logic_error& e) {
      throw ConfigError("run log line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return log;
}

RunLog RunLog::read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

}  // namespace phtmpc
