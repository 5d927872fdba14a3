// frugal: run simulation experiments, render rank reports, serve review
// sessions.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "frugal/harness.hpp"
#include "frugal/review_http.hpp"

namespace fs = std::filesystem;
using namespace frugal;

namespace {

std::vector<std::string> csv_files(const std::string& where) {
  std::vector<std::string> out;
  if (fs::is_directory(where)) {
    for (const auto& e : fs::directory_iterator(where))
      if (e.is_regular_file() && e.path().extension() == ".csv") out.push_back(e.path().string());
    std::sort(out.begin(), out.end());
  } else {
    out.push_back(where);
  }
  return out;
}

std::vector<std::string> split_list(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const auto& item : items)
    for (const auto& part : split_csv_line(item))
      if (!part.empty()) out.push_back(part);
  return out;
}

int cmd_run(const std::vector<std::string>& data, const std::vector<std::string>& algos,
            const std::vector<std::string>& budgets, std::size_t repeats, std::uint64_t seed,
            const std::string& out_dir, double stop, unsigned threads, bool quiet) {
  ExperimentPlan plan;
  for (const auto& d : data)
    for (auto& f : csv_files(d)) plan.datasets.push_back(f);
  if (!algos.empty()) {
    plan.algorithms.clear();
    for (const auto& a : split_list(algos)) {
      if (a == "all") {
        plan.algorithms = ExperimentPlan{}.algorithms;
        continue;
      }
      auto parsed = parse_algorithm(a);
      if (!parsed) {
        std::cerr << "unknown algorithm '" << a << "'\n";
        return 2;
      }
      plan.algorithms.push_back(*parsed);
    }
  }
  if (!budgets.empty()) {
    plan.budgets.clear();
    for (const auto& b : split_list(budgets)) {
      auto v = parse_number(b);
      if (!v || *v < 1 || *v != std::floor(*v)) {
        std::cerr << "bad budget '" << b << "'\n";
        return 2;
      }
      plan.budgets.push_back(static_cast<std::size_t>(*v));
    }
  }
  plan.repeats = repeats;
  plan.seed = seed;
  plan.config.stop = stop;
  plan.threads = threads;

  ExperimentOutput result;
  try {
    result = run_experiment(plan, [&](std::size_t done, std::size_t total) {
      if (!quiet && (done == total || done % 100 == 0)) std::cerr << "\r" << done << "/" << total << " runs" << std::flush;
    });
    if (!quiet) std::cerr << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  for (const auto& s : result.skipped) std::cerr << "skipped " << s << '\n';
  if (result.records.empty()) {
    std::cerr << "error: no runs completed\n";
    return 1;
  }

  fs::create_directories(out_dir);
  {
    std::ofstream out(fs::path(out_dir) / "results.csv", std::ios::binary | std::ios::trunc);
    write_results(out, result.records);
    if (!out) {
      std::cerr << "error: cannot write results\n";
      return 1;
    }
  }
  {
    std::ofstream out(fs::path(out_dir) / "timings.csv", std::ios::binary | std::ios::trunc);
    out << "dataset,algorithm,policy,budget,repeat,seconds\n";
    for (std::size_t i = 0; i < result.records.size(); ++i) {
      const auto& r = result.records[i];
      out << r.dataset << ',' << r.algorithm << ',' << r.policy << ',' << r.budget << ',' << r.repeat << ','
          << result.seconds[i] << '\n';
    }
  }
  std::size_t failed = 0;
  for (const auto& r : result.records) failed += !r.ok();
  if (failed) std::cerr << failed << " run(s) failed\n";
  if (!quiet) std::cerr << "wrote " << (fs::path(out_dir) / "results.csv").string() << '\n';
  return result.skipped.empty() ? 0 : 1;
}

int cmd_report(const std::string& in_path, bool table6) {
  fs::path file = in_path;
  if (fs::is_directory(file)) file /= "results.csv";
  std::ifstream in(file);
  if (!in) {
    std::cerr << "error: cannot read " << file.string() << '\n';
    return 1;
  }
  try {
    const auto reports = rank_records(read_results(in));
    if (reports.empty()) {
      std::cerr << "error: no successful runs in " << file.string() << '\n';
      return 1;
    }
    for (std::size_t i = 0; i < reports.size(); ++i) {
      if (i) std::cout << '\n';
      render_report(std::cout, reports[i]);
    }
    if (table6) {
      std::cout << '\n';
      render_summary(std::cout, summarize_best(reports));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

httplib::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

int cmd_serve(const std::string& host, int port, const std::string& data, const std::string& journal,
              const std::string& ui) {
  std::optional<fs::path> jdir;
  if (!journal.empty()) jdir = journal;
  review::SessionManager mgr(jdir);
  if (!data.empty()) {
    try {
      for (const auto& w : mgr.load_directory(data)) std::cerr << "warning: " << w << '\n';
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 1;
    }
  }
  for (const auto& p : mgr.restore()) std::cerr << "warning: replay " << p << '\n';

  httplib::Server server;
  review::install_routes(server, mgr);
  if (!ui.empty() && !server.set_mount_point("/", ui)) {
    std::cerr << "error: cannot serve " << ui << '\n';
    return 1;
  }
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  int bound = port;
  if (port == 0) {
    bound = server.bind_to_any_port(host);
  } else if (!server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) {
    std::cerr << "error: cannot listen on " << host << ":" << port << '\n';
    return 1;
  }
  std::cout << "listening on http://" << host << ":" << bound << std::endl;
  server.listen_after_bind();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Label-frugal search experiments and review sessions"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run an experiment plan and write results.csv");
  std::vector<std::string> data, algos, budgets;
  std::size_t repeats = 20;
  std::uint64_t seed = 1;
  std::string out_dir;
  double stop = Config{}.stop;
  unsigned threads = 0;
  bool quiet = false;
  run->add_option("--data", data, "csv file(s) or directories")->required();
  run->add_option("--algo", algos, "lite-certain,lite-uncertain,sway,random,baseline or all");
  run->add_option("--budget", budgets, "label budgets (default 10,20,...,80)");
  run->add_option("--repeats", repeats)->check(CLI::PositiveNumber);
  run->add_option("--seed", seed);
  run->add_option("--out", out_dir)->required();
  run->add_option("--stop", stop, "sway leaf size exponent")->check(CLI::Range(0.01, 1.0));
  run->add_option("--threads", threads);
  run->add_flag("--quiet", quiet);

  auto* report = app.add_subcommand("report", "rank treatments in a results file");
  std::string in_path;
  bool table6 = false;
  report->add_option("--in", in_path, "results.csv or its directory")->required();
  report->add_flag("--table6", table6, "append the cross-dataset summary");

  auto* serve = app.add_subcommand("serve", "serve review sessions over HTTP");
  std::string host = "127.0.0.1", serve_data, journal, ui;
  int port = 8080;
  serve->add_option("--host", host);
  serve->add_option("--port", port, "0 picks a free port")->check(CLI::Range(0, 65535));
  serve->add_option("--data", serve_data, "directory of csv datasets");
  serve->add_option("--journal", journal, "directory for session journals");
  serve->add_option("--ui", ui, "static files to serve at /");

  CLI11_PARSE(app, argc, argv);

  if (*run) return cmd_run(data, algos, budgets, repeats, seed, out_dir, stop, threads, quiet);
  if (*report) return cmd_report(in_path, table6);
  if (*serve) return cmd_serve(host, port, serve_data, journal, ui);
  return 2;
}
