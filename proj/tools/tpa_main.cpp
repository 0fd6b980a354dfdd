#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "tpa/errors.hpp"
#include "tpa/scenario.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw tpa::Error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulator for time-synchronous, message-asynchronous component networks"};
  app.require_subcommand(1);

  std::string run_file, trace_out;
  auto* run = app.add_subcommand("run", "Assemble a scenario, execute it, emit its trace");
  run->add_option("file", run_file, "scenario file")->required();
  run->add_option("--trace", trace_out, "write the trace here instead of stdout");

  std::string check_file, property;
  std::size_t samples = 200, budget = 10000;
  auto* check = app.add_subcommand("check", "Check a property of a scenario");
  check->add_option("file", check_file, "scenario file")->required();
  check->add_option("--property", property,
                    "reactivity | weak-pulse | strong-pulse | medium-laws | stability(k)")
      ->required();
  check->add_option("--samples", samples, "sample count for pulse checks");
  check->add_option("--budget", budget, "probe/search budget");

  auto* list = app.add_subcommand("list-kinds", "List the builtin component kinds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (list->parsed()) {
      for (const auto& k : tpa::builtin_kinds()) std::cout << k << "\n";
      return 0;
    }
    if (run->parsed()) {
      tpa::Scenario s = tpa::parse_scenario(read_file(run_file));
      std::string trace = tpa::format_trace(tpa::run_scenario(s));
      if (trace_out.empty()) {
        std::cout << trace;
      } else {
        std::ofstream out(trace_out, std::ios::binary);
        if (!out) throw tpa::Error("cannot write '" + trace_out + "'");
        out << trace;
      }
      return 0;
    }
    tpa::Scenario s = tpa::parse_scenario(read_file(check_file));
    tpa::CheckOutcome outcome = tpa::check_scenario(s, property, samples, budget);
    std::cout << outcome.report << "\n";
    return outcome.pass ? 0 : 1;
  } catch (const tpa::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const tpa::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
