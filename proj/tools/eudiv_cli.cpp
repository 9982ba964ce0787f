// eudiv: experiment runner for the expected-utility simulator.
//
// Exit codes: 0 success, 1 configuration error, 2 empty support, 3 incomplete scan.

#include "eudiv/eudiv.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <string>
#include <vector>

namespace {

using namespace eudiv;

constexpr int kExitConfig = 1;
constexpr int kExitEmptySupport = 2;
constexpr int kExitIncomplete = 3;

struct ConfigArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  unsigned threads = 0;  // 0: keep the config value
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("-c,--config", args.config_path, "key=value config file");
  cmd->add_option("-s,--set", args.overrides, "override a config key (key=value), repeatable");
  cmd->add_option("-j,--threads", args.threads, "worker threads (results do not depend on this)");
}

ExperimentConfig resolve(const ConfigArgs& args) {
  ExperimentConfig c = args.config_path.empty() ? ExperimentConfig{} : load_config(args.config_path);
  for (const auto& kv : args.overrides) apply_assignment(c, kv);
  if (args.threads) c.threads = args.threads;
  return c;
}

// Writes to the named file, or stdout when the name is empty or "-".
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw ConfigError("cannot open output file " + path);
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

int cmd_disasm(const std::string& index) {
  std::cout << decode(parse_natural(index)).text();
  return 0;
}

int cmd_asm(const std::string& path) {
  std::string text;
  if (path.empty() || path == "-") {
    text.assign(std::istreambuf_iterator<char>(std::cin), {});
  } else {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open program file " + path);
    text.assign(std::istreambuf_iterator<char>(in), {});
  }
  std::cout << encode(parse_program(text)).get_str() << '\n';
  return 0;
}

int cmd_posterior(const ConfigArgs& args, const std::string& out) {
  ExperimentConfig c = resolve(args);
  Context ctx = c.context();
  History h = c.load_history();
  if (c.budget == 0) throw ConfigError("step budgets must be at least 1");
  PosteriorTable t = build_posterior(h, c.cutoff, StepBudget{c.budget}, ctx.alphabets, ctx.prior, ctx.threads);
  Sink sink(out);
  t.write_csv(sink.stream());
  return 0;
}

int cmd_exputil(const ConfigArgs& args, const std::string& json_out, const std::string& csv_out) {
  ExperimentConfig c = resolve(args);
  Context ctx = c.context();
  UtilityPtr spec = c.make_spec();
  if (!spec->bounded())
    throw ConfigError(spec->name() + " is unbounded, so its expected utility has no value to bracket; run `diverge`");
  ConvergenceReport rep = convergence_report(c.make_policy(), c.load_history(), *spec, c.make_schedule(), ctx);
  nlohmann::ordered_json j = to_json(rep);
  j["utility"] = spec->name();
  j["policy"] = describe(c.make_policy());
  j["prior"] = ctx.prior.name();
  {
    Sink sink(json_out);
    sink.stream() << j.dump(2) << '\n';
  }
  if (!csv_out.empty()) {
    Sink sink(csv_out);
    write_schedule_csv(sink.stream(), rep);
  }
  return 0;
}

int cmd_diverge(const ConfigArgs& args, const std::string& json_out, const std::string& jsonl_out) {
  ExperimentConfig c = resolve(args);
  Context ctx = c.context();
  UtilityPtr spec = c.make_spec();
  DivergenceReport rep = divergence_scan(c.make_policy(), c.load_history(), *spec, c.target, c.make_caps(),
                                         parse_scan_direction(c.direction), ctx);
  {
    Sink sink(json_out);
    sink.stream() << to_json(rep).dump(2) << '\n';
  }
  if (!jsonl_out.empty()) {
    Sink sink(jsonl_out);
    write_jsonl(sink.stream(), rep.records);
  }
  if (!rep.complete) {
    std::cerr << "incomplete scan: " << rep.records.size() << " of "
              << rep.target * (rep.direction == ScanDirection::Both ? 2 : 1) << " records after "
              << rep.attempts_used << " attempts\n";
    return kExitIncomplete;
  }
  return 0;
}

int cmd_bb(std::uint64_t n, std::uint64_t budget, unsigned threads, const std::string& out) {
  if (budget == 0) throw ConfigError("step budgets must be at least 1");
  auto rows = busy_beaver_table(n, StepBudget{budget}, std::max(threads, 1u));
  Sink sink(out);
  std::ostream& os = sink.stream();
  os << "n,theta_n,bound,argmax\n";
  for (const auto& r : rows) {
    os << r.n << ',' << (r.theta ? r.theta->get_str() : "") << ',' << (r.bound ? r.bound->get_str() : "undefined")
       << ',' << (r.argmax ? std::to_string(*r.argmax) : "") << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulator for expected utility over enumerated environment programs"};
  app.require_subcommand(1);

  std::string index;
  auto* disasm = app.add_subcommand("disasm", "print the program with the given index");
  disasm->add_option("index", index, "program index")->required();

  std::string program_path;
  auto* assemble = app.add_subcommand("asm", "print the index of a program text (file or stdin)");
  assemble->add_option("file", program_path, "program text file; '-' or omitted reads stdin");

  ConfigArgs post_args, eu_args, div_args;
  std::string post_out, eu_json, eu_csv, div_json, div_jsonl;

  auto* posterior = app.add_subcommand("posterior", "classify programs against a history; CSV table");
  add_config_options(posterior, post_args);
  posterior->add_option("-o,--out", post_out, "CSV output path (default stdout)");

  auto* exputil = app.add_subcommand("exputil", "expected-utility intervals along a schedule");
  add_config_options(exputil, eu_args);
  exputil->add_option("-o,--out", eu_json, "JSON output path (default stdout)");
  exputil->add_option("--csv", eu_csv, "schedule CSV output path");

  auto* diverge = app.add_subcommand("diverge", "collect series terms of magnitude at least 1");
  add_config_options(diverge, div_args);
  diverge->add_option("-o,--out", div_json, "JSON report path (default stdout)");
  diverge->add_option("--jsonl", div_jsonl, "witness records, one JSON object per line");

  std::uint64_t bb_n = 0, bb_budget = 10000;
  unsigned bb_threads = 1;
  std::string bb_out;
  auto* bb = app.add_subcommand("bb", "budgeted busy-beaver lower bounds B_T(k) for k <= n; CSV");
  bb->add_option("n", bb_n, "largest index")->required();
  bb->add_option("-t,--budget", bb_budget, "step budget T");
  bb->add_option("-j,--threads", bb_threads, "worker threads");
  bb->add_option("-o,--out", bb_out, "CSV output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*disasm) return cmd_disasm(index);
    if (*assemble) return cmd_asm(program_path);
    if (*posterior) return cmd_posterior(post_args, post_out);
    if (*exputil) return cmd_exputil(eu_args, eu_json, eu_csv);
    if (*diverge) return cmd_diverge(div_args, div_json, div_jsonl);
    if (*bb) return cmd_bb(bb_n, bb_budget, bb_threads, bb_out);
  } catch (const EmptySupport& e) {
    std::cerr << "empty support: " << e.what() << '\n';
    return kExitEmptySupport;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
