// knart-verify: checks the condition logic of KNART artifacts with an
// external SMT solver.

#include <curl/curl.h>

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "knart/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 3;

const std::vector<std::string> kCorpusFiles = {"OS-01.xml",  "ECA-01.xml", "ECA-02.xml", "ECA-03.xml",
                                               "ECA-04.xml", "DT-01.xml",  "DT-02.xml"};

std::optional<std::string> read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

size_t append_body(char* data, size_t size, size_t n, void* user) {
  static_cast<std::string*>(user)->append(data, size * n);
  return size * n;
}

bool download_corpus(const std::string& base_url, const std::vector<std::string>& files, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    std::cerr << "knart-verify: cannot create " << dir << ": " << ec.message() << "\n";
    return false;
  }
  curl_global_init(CURL_GLOBAL_DEFAULT);
  bool ok = true;
  for (const auto& name : files) {
    std::string url = base_url + (base_url.ends_with('/') ? "" : "/") + name;
    std::string body;
    CURL* curl = curl_easy_init();
    curl_easy_setopt(curl, CURLOPT_URL, url.c_str());
    curl_easy_setopt(curl, CURLOPT_FOLLOWLOCATION, 1L);
    curl_easy_setopt(curl, CURLOPT_FAILONERROR, 1L);
    curl_easy_setopt(curl, CURLOPT_WRITEFUNCTION, &append_body);
    curl_easy_setopt(curl, CURLOPT_WRITEDATA, &body);
    CURLcode rc = curl_easy_perform(curl);
    curl_easy_cleanup(curl);
    if (rc != CURLE_OK) {
      std::cerr << "knart-verify: download of " << url << " failed: " << curl_easy_strerror(rc) << "\n";
      ok = false;
      continue;
    }
    std::ofstream(dir / name, std::ios::binary) << body;
  }
  curl_global_cleanup();
  return ok;
}

struct Job {
  fs::path path;
};

struct Outcome {
  std::optional<knart::report::VerificationReport> report;
  std::string error;
  int exit_code = 0;
};

Outcome run_job(const Job& job, const knart::VerifyOptions& options, const std::optional<fs::path>& emit_dir) {
  Outcome out;
  auto bytes = read_file(job.path);
  if (!bytes) {
    out.error = "cannot read " + job.path.string();
    out.exit_code = kExitUsage;
    return out;
  }
  try {
    auto report = knart::verify_artifact(*bytes, job.path.string(), options);
    if (emit_dir) {
      for (const auto& run : report.runs) {
        std::string name = job.path.stem().string();
        if (!run.condition_id.empty()) name += "." + run.condition_id;
        std::ofstream f(*emit_dir / (name + ".smt2"), std::ios::binary);
        f << run.text;
        if (!f) {
          out.error = "cannot write " + (*emit_dir / (name + ".smt2")).string();
          out.exit_code = kExitUsage;
        }
      }
    }
    out.exit_code = std::max(out.exit_code, knart::report::exit_code(report.status));
    out.report = std::move(report);
  } catch (const knart::Error& e) {
    out.error = job.path.string() + ": " + e.what();
    out.exit_code = kExitUsage;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Check KNART artifact condition logic for satisfiability with an SMT solver"};
  app.require_subcommand(1);
  CLI::App* verify = app.add_subcommand("verify", "Verify artifacts (files or directories of .xml)");

  std::vector<std::string> paths;
  std::string solver_cmd;
  int timeout_ms = knart::smt::kDefaultTimeoutMs;
  std::string mode = "portable";
  bool per_condition = false;
  std::string spec_file;
  bool unsat_core = true;
  std::string emit_smt;
  std::string format = "text";
  std::string set_logic;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  std::string download_url;
  std::string corpus_dir = "knart-corpus";
  std::vector<std::string> corpus_files = kCorpusFiles;

  verify->add_option("paths", paths, "Artifact files or directories");
  verify->add_option("--solver-cmd", solver_cmd, "Solver command reading SMT-LIB on stdin (default: $SMT_SOLVER_CMD or 'z3 -in')");
  verify->add_option("--timeout-ms", timeout_ms, "Per-script solver timeout")->check(CLI::PositiveNumber);
  verify->add_option("--mode", mode, "List encoding")->check(CLI::IsMember({"paper", "portable"}));
  verify->add_flag("--per-condition", per_condition, "One script per condition");
  verify->add_option("--spec", spec_file, "File of (constraint <name> <term>) forms");
  verify->add_flag("--unsat-core,!--no-unsat-core", unsat_core, "Name assertions and report unsat cores (default on)");
  verify->add_option("--emit-smt", emit_smt, "Write generated .smt2 scripts to this directory");
  verify->add_option("--format", format, "Report format")->check(CLI::IsMember({"text", "json"}));
  verify->add_option("--set-logic", set_logic, "Emit (set-logic NAME)");
  verify->add_option("--jobs", jobs, "Artifacts verified in parallel")->check(CLI::PositiveNumber);
  verify->add_option("--download-corpus", download_url, "Fetch the example artifacts from this base URL first");
  verify->add_option("--corpus-dir", corpus_dir, "Where --download-corpus stores files");
  verify->add_option("--corpus-files", corpus_files, "File names fetched by --download-corpus")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  knart::VerifyOptions options;
  options.mode = mode == "paper" ? knart::smt::Mode::PaperCompat : knart::smt::Mode::Portable;
  options.per_condition = per_condition;
  options.want_cores = unsat_core;
  if (!set_logic.empty()) options.logic = set_logic;
  if (solver_cmd.empty()) {
    const char* env = std::getenv("SMT_SOLVER_CMD");
    solver_cmd = env && *env ? env : std::string(knart::smt::kDefaultSolverCommand);
  }
  options.solver.command = knart::proc::split_command(solver_cmd);
  if (options.solver.command.empty()) {
    std::cerr << "knart-verify: empty solver command\n";
    return kExitUsage;
  }
  options.solver.timeout_ms = timeout_ms;

  if (!spec_file.empty()) {
    auto text = read_file(spec_file);
    if (!text) {
      std::cerr << "knart-verify: cannot read " << spec_file << "\n";
      return kExitUsage;
    }
    try {
      options.spec = knart::smt::parse_spec(*text);
    } catch (const knart::Error& e) {
      std::cerr << "knart-verify: " << spec_file << ": " << e.what() << "\n";
      return kExitUsage;
    }
  }

  int worst = 0;
  if (!download_url.empty()) {
    if (!download_corpus(download_url, corpus_files, corpus_dir)) worst = kExitUsage;
    if (paths.empty()) paths.push_back(corpus_dir);
  }
  if (paths.empty()) {
    std::cerr << "knart-verify: no input paths\n";
    return kExitUsage;
  }

  std::optional<fs::path> emit_dir;
  if (!emit_smt.empty()) {
    std::error_code ec;
    fs::create_directories(emit_smt, ec);
    if (ec) {
      std::cerr << "knart-verify: cannot create " << emit_smt << ": " << ec.message() << "\n";
      return kExitUsage;
    }
    emit_dir = emit_smt;
  }

  std::vector<Job> work;
  for (const auto& p : paths) {
    std::error_code ec;
    if (fs::is_directory(p, ec)) {
      std::vector<fs::path> files;
      for (const auto& entry : fs::directory_iterator(p, ec)) {
        if (entry.is_regular_file() && entry.path().extension() == ".xml") files.push_back(entry.path());
      }
      std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
        return a.filename().string() < b.filename().string();
      });
      for (auto& f : files) work.push_back({f});
    } else {
      work.push_back({p});
    }
  }

  // Workers pull jobs in order; finished reports are printed strictly in
  // input order as soon as every earlier one is done.
  std::vector<std::optional<Outcome>> results(work.size());
  std::mutex mu;
  std::size_t next_print = 0;
  bool header_done = false;
  std::atomic<std::size_t> next_job{0};
  auto flush = [&] {
    while (next_print < results.size() && results[next_print]) {
      Outcome& o = *results[next_print];
      if (!o.error.empty()) std::cerr << "knart-verify: " << o.error << "\n";
      if (o.report) {
        if (format == "json") {
          std::cout << knart::report::render_json(*o.report);
        } else {
          if (!header_done) std::cout << knart::report::text_header();
          header_done = true;
          std::cout << knart::report::render_text(*o.report);
        }
      }
      std::cout.flush();
      worst = std::max(worst, o.exit_code);
      ++next_print;
    }
  };
  auto worker = [&] {
    for (std::size_t i = next_job++; i < work.size(); i = next_job++) {
      Outcome o = run_job(work[i], options, emit_dir);
      std::lock_guard lock(mu);
      results[i] = std::move(o);
      flush();
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < std::min<std::size_t>(jobs, work.size()); ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return worst;
}
