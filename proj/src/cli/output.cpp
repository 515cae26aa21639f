#include <charconv>
#include <fstream>
#include <sstream>

#include <Eigen/Core>
#include <boost/algorithm/string/split.hpp>
#include <boost/algorithm/string/trim.hpp>
#include <fmt/format.h>

#include "spescreen/cli/pipeline.hpp"
#include "spescreen/error.hpp"

namespace spescreen::cli {

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return fmt::format("{:016x}", h);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ValidationError("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw ValidationError("write failed for '" + path.string() + "'");
  }
  fs::rename(tmp, path);
}

std::vector<std::size_t> parse_index_ranges(const std::string& text) {
  std::vector<std::string> parts;
  boost::algorithm::split(parts, text, [](char c) { return c == ','; });
  std::vector<std::size_t> out;
  auto num = [&](std::string s) {
    boost::algorithm::trim(s);
    std::size_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty()) {
      throw ValidationError("bad atom index '" + s + "' in '" + text + "'");
    }
    return v;
  };
  for (const auto& part : parts) {
    if (boost::algorithm::trim_copy(part).empty()) continue;
    const auto dash = part.find('-');
    if (dash == std::string::npos) {
      out.push_back(num(part));
      continue;
    }
    const auto lo = num(part.substr(0, dash)), hi = num(part.substr(dash + 1));
    if (hi < lo) throw ValidationError("descending range '" + part + "'");
    for (auto i = lo; i <= hi; ++i) out.push_back(i);
  }
  if (out.empty()) throw ValidationError("empty atom index list");
  return out;
}

StageOutput::StageOutput(std::string stage, nlohmann::ordered_json params)
    : stage_(std::move(stage)), params_(std::move(params)) {}

void StageOutput::add(const std::string& name, std::string content) { files_[name] = std::move(content); }

void StageOutput::input(const fs::path& path) { inputs_.push_back(path); }

std::vector<fs::path> StageOutput::commit(const GlobalOptions& g) const {
  nlohmann::ordered_json m;
  m["stage"] = stage_;
  m["versions"] = {{"spescreen", "0.1.0"},
                   {"eigen", fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION)},
                   {"compiler", __VERSION__}};
  m["seed"] = g.seed;
  m["parameters"] = params_;
  // the seed is part of what reproduces the outputs
  m["parameter_hash"] = fnv1a_hex(params_.dump() + "|seed=" + std::to_string(g.seed));
  auto& ins = m["inputs"] = nlohmann::ordered_json::array();
  for (const auto& p : inputs_) {
    const auto bytes = read_text(p);
    ins.push_back({{"path", p.string()}, {"bytes", bytes.size()}, {"fnv1a", fnv1a_hex(bytes)}});
  }
  auto& outs = m["outputs"] = nlohmann::ordered_json::array();
  std::vector<fs::path> written;
  for (const auto& [name, content] : files_) {
    outs.push_back({{"path", name}, {"bytes", content.size()}, {"fnv1a", fnv1a_hex(content)}});
  }
  fs::create_directories(g.out_dir);
  for (const auto& [name, content] : files_) {
    write_text_atomic(g.out_dir / name, content);
    written.push_back(g.out_dir / name);
  }
  const auto mpath = g.out_dir / (stage_ + ".manifest.json");
  write_text_atomic(mpath, m.dump(2) + "\n");
  written.push_back(mpath);
  return written;
}

}  // namespace spescreen::cli
