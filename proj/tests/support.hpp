#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "knart/process.hpp"

namespace testing {

inline std::filesystem::path fixture_path(const std::string& name) {
  return std::filesystem::path(KNART_FIXTURES) / name;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string fixture(const std::string& name) { return read_text(fixture_path(name)); }

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

/// Runs the knart-verify binary with `args` and collects its output.
inline CliResult run_cli(const std::vector<std::string>& args, int timeout_s = 60) {
  std::vector<std::string> argv{KNART_VERIFY_BIN};
  argv.insert(argv.end(), args.begin(), args.end());
  knart::proc::ChildProcess child(argv);
  child.close_stdin();
  auto deadline = knart::proc::Clock::now() + std::chrono::seconds(timeout_s);
  child.receive([](std::string&) { return false; }, deadline);
  CliResult r;
  r.code = child.wait(deadline);
  r.out = child.output();
  r.err = child.errors();
  return r;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("knart-test-" + name + "-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
