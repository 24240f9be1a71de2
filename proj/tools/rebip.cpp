// Command-line front end for the component-system interpreter and the
// runtime-enforcement pipeline.

#include <CLI11.hpp>

#include "rebip/bench.hpp"
#include "rebip/checks.hpp"

#include <filesystem>
#include <iostream>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitClassification = 3;
constexpr int kExitPropertyCheck = 4;

std::string sidecar_path(const std::string& model_path) {
  return model_path + ".provenance.json";
}

rebip::json classification_json(const rebip::Classification& c) {
  rebip::json j;
  j["safety"] = c.safety;
  j["stutter_invariant"] = c.stutter_invariant;
  j["k"] = c.k ? rebip::json(*c.k) : rebip::json(nullptr);
  j["eligible"] = c.safety && c.stutter_invariant && c.k && *c.k == 1;
  j["warnings"] = c.warnings;
  return j;
}

int cmd_validate(const std::string& model_path) {
  rebip::System sys = rebip::load_system(model_path);
  auto diags = rebip::validate_model(sys);
  rebip::json j;
  j["valid"] = diags.empty();
  j["diagnostics"] = diags;
  std::cout << j.dump(2) << "\n";
  return diags.empty() ? kExitOk : kExitValidation;
}

int cmd_classify(const std::string& oracle_path) {
  rebip::Oracle o = rebip::load_oracle(oracle_path);
  auto c = rebip::classify_oracle(o);
  auto j = classification_json(c);
  std::cout << j.dump(2) << "\n";
  return j["eligible"].get<bool>() ? kExitOk : kExitClassification;
}

int cmd_supervise(const std::string& model_path, const std::string& oracle_path,
                  const std::string& out_path, bool with_disabler, bool optimize) {
  rebip::System sys = rebip::load_system(model_path);
  rebip::require_valid(sys);
  rebip::Oracle o = rebip::load_oracle(oracle_path);
  auto c = rebip::classify_oracle(o);
  auto cj = classification_json(c);
  if (!cj["eligible"].get<bool>()) {
    std::cerr << "oracle is not enforceable by this pipeline:\n" << cj.dump(2) << "\n";
    return kExitClassification;
  }
  rebip::SupervisedSystem sup = rebip::supervise(sys, o, with_disabler, optimize);
  rebip::save_system(sup.system, out_path);
  rebip::json side;
  side["info"] = rebip::supervision_info_to_json(sup.info);
  side["provenance"] = sup.provenance;
  side["warnings"] = sup.warnings;
  side["original"] = rebip::system_to_json(sys);
  side["oracle"] = rebip::oracle_to_json(o);
  std::ofstream out(sidecar_path(out_path));
  out << side.dump(2) << "\n";
  for (const auto& w : sup.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << rebip::json{{"model", out_path}, {"provenance", sidecar_path(out_path)}}.dump(2)
            << "\n";
  return kExitOk;
}

int cmd_run(const std::string& model_path, bool lex, uint64_t seed, size_t max_steps,
            size_t correct_steps, const std::string& trace_path) {
  rebip::System sys = rebip::load_system(model_path);
  rebip::require_valid(sys);
  std::unique_ptr<rebip::Policy> policy;
  if (lex)
    policy = std::make_unique<rebip::LexPolicy>();
  else
    policy = std::make_unique<rebip::RandomPolicy>(seed);

  rebip::json summary;
  std::string side = sidecar_path(model_path);
  if (std::filesystem::exists(side)) {
    std::ifstream in(side);
    rebip::json sj;
    in >> sj;
    rebip::SupervisionInfo info = rebip::supervision_info_from_json(sj.at("info"));
    rebip::SupRunOptions opts;
    opts.max_steps = max_steps;
    opts.correct_target = correct_steps;
    opts.keep_run = !trace_path.empty();
    rebip::SupRunStats st = rebip::run_supervised(sys, info, *policy, opts);
    summary = {{"steps", st.steps},       {"rollbacks", st.rollbacks},
               {"correct_steps", st.correct_steps}, {"deadlock", st.deadlock},
               {"livelock", st.livelock}};
    if (!trace_path.empty()) {
      rebip::SimResult res;
      res.run = std::move(st.run);
      res.terminal = st.deadlock ? rebip::Terminal::Deadlock : rebip::Terminal::MaxSteps;
      std::ofstream tr(trace_path);
      rebip::write_trace(tr, sys, res);
    }
  } else {
    rebip::SimResult res = rebip::simulate(sys, *policy, max_steps);
    summary = {{"steps", res.run.steps.size()},
               {"rollbacks", 0},
               {"correct_steps", res.run.steps.size()},
               {"deadlock", res.terminal == rebip::Terminal::Deadlock},
               {"livelock", false}};
    if (!trace_path.empty()) {
      std::ofstream tr(trace_path);
      rebip::write_trace(tr, sys, res);
    }
  }
  std::cout << summary.dump(2) << "\n";
  return kExitOk;
}

int cmd_explore(const std::string& model_path, size_t bound) {
  rebip::System sys = rebip::load_system(model_path);
  rebip::require_valid(sys);
  rebip::ExploreResult res = rebip::explore(sys, bound);
  rebip::json j{{"states", res.reachable.size()},
                {"deadlocks", res.deadlocks.size()},
                {"truncated", res.truncated}};
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

int cmd_check(const std::string& model_path, const std::string& oracle_path, size_t bound,
              bool with_disabler, bool optimize) {
  rebip::System sys = rebip::load_system(model_path);
  rebip::require_valid(sys);
  rebip::Oracle o = rebip::load_oracle(oracle_path);
  rebip::SupervisedSystem sup = rebip::supervise(sys, o, with_disabler, optimize);
  rebip::PropositionReport rep =
      rebip::check_propositions(sys, sup.system, sup.info, o, bound);
  rebip::json j = rep.to_json();
  bool truncated_lts = false;
  try {
    rebip::Lts lts = rebip::lts_from_system(sys, o, bound, truncated_lts);
    rebip::SoundnessReport abs = rebip::check_em_soundness(lts, o, 6);
    j["abstract"] = abs.to_json();
    j["abstract"]["truncated"] = truncated_lts;
    if (!abs.item1 || !abs.item2) j["counterexample"] = "abstract composition check failed";
  } catch (const std::exception& e) {
    j["abstract"] = {{"skipped", e.what()}};
  }
  std::cout << j.dump(2) << "\n";
  bool ok = rep.all_pass() &&
            (!j.contains("abstract") || !j["abstract"].contains("item1") ||
             (j["abstract"]["item1"].get<bool>() && j["abstract"]["item2"].get<bool>()));
  return ok ? kExitOk : kExitPropertyCheck;
}

int cmd_gen_bench(const std::string& kind, int a, int b, const std::string& model_out,
                  const std::string& oracle_out) {
  rebip::Bench bench;
  if (kind == "philosophers")
    bench = rebip::make_philosophers(a);
  else if (kind == "robots")
    bench = rebip::make_robots(a, b);
  else {
    std::cerr << "unknown benchmark '" << kind << "' (expected philosophers or robots)\n";
    return kExitUsage;
  }
  rebip::save_system(bench.system, model_out);
  std::ofstream out(oracle_out);
  out << rebip::oracle_to_json(bench.oracle).dump(2) << "\n";
  std::cout << rebip::json{{"model", model_out}, {"oracle", oracle_out}}.dump(2) << "\n";
  return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interpreter and runtime-enforcement toolchain for component systems"};
  app.require_subcommand(1);

  std::string model, oracle, out = "supervised.json", trace;
  bool disabler = false, no_optimize = false, lex = false;
  uint64_t seed = 0;
  size_t max_steps = 100000, correct_steps = 0, bound = 200000;

  auto* validate = app.add_subcommand("validate", "Check a model file");
  validate->add_option("model", model)->required();

  auto* classify = app.add_subcommand("classify", "Classify a property oracle");
  classify->add_option("oracle", oracle)->required();

  auto* supervise = app.add_subcommand("supervise", "Synthesize the supervised system");
  supervise->add_option("model", model)->required();
  supervise->add_option("oracle", oracle)->required();
  supervise->add_option("-o,--out", out, "Output model path");
  supervise->add_flag("--disabler", disabler, "Integrate a disabler component");
  supervise->add_flag("--no-optimize", no_optimize, "Instrument whole components");

  auto* run = app.add_subcommand("run", "Simulate a model");
  run->add_option("model", model)->required();
  auto* lex_flag = run->add_flag("--lex", lex, "Deterministic smallest-interaction policy");
  run->add_option("--seed", seed, "Random policy seed")->excludes(lex_flag);
  run->add_option("--max-steps", max_steps);
  run->add_option("--correct-steps", correct_steps, "Stop after this many correct steps");
  run->add_option("--trace", trace, "Write a JSONL trace here");

  auto* explore = app.add_subcommand("explore", "Bounded reachability summary");
  explore->add_option("model", model)->required();
  explore->add_option("--bound", bound);

  auto* check = app.add_subcommand("check", "Verify the supervision propositions");
  check->add_option("model", model)->required();
  check->add_option("oracle", oracle)->required();
  check->add_option("--bound", bound);
  check->add_flag("--disabler", disabler);
  check->add_flag("--no-optimize", no_optimize);

  std::string bench_kind;
  int bench_a = 0, bench_b = 0;
  std::string bench_model = "bench_model.json", bench_oracle = "bench_oracle.json";
  auto* gen = app.add_subcommand("gen-bench", "Generate a benchmark model and oracle");
  gen->add_option("kind", bench_kind, "philosophers | robots")->required();
  gen->add_option("a", bench_a, "philosopher count | robot count")->required();
  gen->add_option("b", bench_b, "grid size (robots only)");
  gen->add_option("--out-model", bench_model);
  gen->add_option("--out-oracle", bench_oracle);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (validate->parsed()) return cmd_validate(model);
    if (classify->parsed()) return cmd_classify(oracle);
    if (supervise->parsed()) return cmd_supervise(model, oracle, out, disabler, !no_optimize);
    if (run->parsed()) return cmd_run(model, lex, seed, max_steps, correct_steps, trace);
    if (explore->parsed()) return cmd_explore(model, bound);
    if (check->parsed()) return cmd_check(model, oracle, bound, disabler, !no_optimize);
    if (gen->parsed()) return cmd_gen_bench(bench_kind, bench_a, bench_b, bench_model, bench_oracle);
  } catch (const rebip::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const rebip::ModelError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const rebip::OracleError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitClassification;
  } catch (const rebip::TransformError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitClassification;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
