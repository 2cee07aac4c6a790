// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Every subcommand reads and writes only the files
// named on its command line; errors end the process with one line
// `ltest: error <CODE>: <message>` on stderr.

#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "ltest/config.hpp"
#include "ltest/model_io.hpp"
#include "ltest/outputs.hpp"
#include "ltest/report.hpp"
#include "ltest/session_io.hpp"
#include "ltest/synth.hpp"

namespace fs = std::filesystem;
using namespace ltest;

namespace {

enum Exit { kOk = 0, kValidation = 2, kTraining = 3, kIo = 4 };

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::IoError: return kIo;
    case ErrorCode::NumericalFailure:
    case ErrorCode::SingularFit:
    case ErrorCode::DegenerateCurve:
    case ErrorCode::DegenerateVariance: return kTraining;
    default: return kValidation;
  }
}

/// Options shared by the subcommands that run the modelling workflow.
struct Shared {
  std::string input, out, config, truth, split_file, model;
  std::optional<std::size_t> grid_k;
  std::optional<std::string> hu, delays, features, split_method, linkage, rank_set;
  std::optional<int> restarts, jobs, strata, max_epochs, tuning_restarts;
  std::optional<std::uint64_t> seed;
  std::optional<double> test_fraction;
  bool no_tune = false;
};

void add_workflow_flags(CLI::App* app, Shared& s, bool training) {
  app->add_option("--config", s.config, "flat key = value config file (flags override it)");
  app->add_option("--grid-k", s.grid_k, "points of the fixed relative-intensity grid");
  app->add_option("--seed", s.seed, "run seed (split and weight initializations)");
  app->add_option("--split-method", s.split_method, "knowledge or stratified");
  app->add_option("--test-fraction", s.test_fraction, "share of each stratum sent to test");
  app->add_option("--strata", s.strata, "number of strata (0: cut at the largest gap)");
  app->add_option("--linkage", s.linkage, "average, complete or single");
  app->add_option("--jobs", s.jobs, "worker threads");
  if (!training) return;
  app->add_option("--hu", s.hu, "hidden-unit values, e.g. 1-4");
  app->add_option("--delays", s.delays, "delay values, e.g. 5-11");
  app->add_option("--restarts", s.restarts, "initializations per grid cell");
  app->add_option("--max-epochs", s.max_epochs, "LM epoch limit per training run");
  app->add_option("--features", s.features, "auto, none, hr, hr+hrr or hr+hrr+rpe");
  app->add_option("--rank-set", s.rank_set, "set ranked for model choice: global, train or test");
}

PipelineConfig resolve(const Shared& s) {
  PipelineConfig c;
  if (!s.config.empty())
    for (const auto& [k, v] : parse_config_file(csv::read_file(s.config))) apply_setting(c, k, v);
  if (s.grid_k) c.grid_k = *s.grid_k;
  if (s.seed) c.seed = *s.seed;
  if (s.split_method) c.split_method = parse_split_method(*s.split_method);
  if (s.test_fraction) c.test_fraction = *s.test_fraction;
  if (s.strata) c.n_strata = *s.strata;
  if (s.linkage) c.linkage = parse_linkage(*s.linkage);
  if (s.jobs) c.jobs = *s.jobs;
  if (s.hu) c.hidden_units = parse_int_list(*s.hu);
  if (s.delays) c.delays = parse_int_list(*s.delays);
  if (s.restarts) c.train.restarts = *s.restarts;
  if (s.max_epochs) c.train.max_epochs = *s.max_epochs;
  if (s.tuning_restarts) c.tuning_restarts = *s.tuning_restarts;
  if (s.features) apply_setting(c, "features", *s.features);
  if (s.rank_set) c.rank.set = parse_eval_set(*s.rank_set);
  if (s.no_tune) c.tune = false;
  if (!s.split_file.empty()) {
    c.split_method = SplitMethod::Knowledge;
    c.knowledge_plan = csv::read_file(s.split_file);
  }
  if (c.split_method == SplitMethod::Knowledge && c.knowledge_plan.empty())
    fail(ErrorCode::InvalidArgument, "the knowledge split needs --split <plan file>");
  return c;
}

std::vector<TestSession> load_sessions(const std::string& path) { return parse_sessions(csv::read_file(path)); }

std::map<std::string, double> load_truth(const std::string& path) {
  std::map<std::string, double> m;
  for (const auto& r : synth::parse_truth(csv::read_file(path))) m[r.athlete_id] = r.true_lt_pace;
  return m;
}

fs::path out_dir(const std::string& out) {
  if (out.empty()) fail(ErrorCode::InvalidArgument, "--out directory is required");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create directory " + out + ": " + ec.message());
  return fs::path(out);
}

void print_summary(const PipelineResult& r) {
  const auto& t = r.report.tested;
  std::cout << "final model: HU " << r.final_choice.hidden_units << ", delays " << r.final_choice.delays
            << ", inputs " << to_string(r.selection.selected) << '\n'
            << "tested LT: global " << csv::format_fixed(t.global.heuristic_pct, 2) << "%, train "
            << csv::format_fixed(t.train.heuristic_pct, 2) << "%, test " << csv::format_fixed(t.test.heuristic_pct, 2)
            << "%, R " << csv::format_fixed(pearson_or(t.global), 3) << '\n';
  if (r.report.truth) {
    const auto& u = *r.report.truth;
    std::cout << "ground truth: global " << csv::format_fixed(u.global.heuristic_pct, 2) << "%, train "
              << csv::format_fixed(u.train.heuristic_pct, 2) << "%, test "
              << csv::format_fixed(u.test.heuristic_pct, 2) << "%, R train "
              << csv::format_fixed(pearson_or(u.train), 3) << ", R test " << csv::format_fixed(pearson_or(u.test), 3)
              << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lactate threshold estimation with layer-recurrent networks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic cohort and its ground-truth table");
  std::size_t gen_n = 105;
  int gen_families = 10;
  std::uint64_t gen_seed = 42;
  std::string gen_out, gen_truth;
  synth::CohortOptions gen_opt;
  gen->add_option("--n", gen_n, "athletes")->capture_default_str();
  gen->add_option("--families", gen_families, "planted shape families")->capture_default_str();
  gen->add_option("--seed", gen_seed, "generator seed")->capture_default_str();
  gen->add_option("--noise", gen_opt.lactate_noise, "lactate noise sd, mmol/L")->capture_default_str();
  gen->add_option("--hr-noise", gen_opt.hr_noise, "heart-rate noise sd, bpm")->capture_default_str();
  gen->add_option("--position-sd", gen_opt.position_sd, "within-family spread of the threshold position")
      ->capture_default_str();
  gen->add_option("--hr-offset-sd", gen_opt.hr_offset_sd, "spread of the HR deflection around the threshold")
      ->capture_default_str();
  gen->add_option("--out", gen_out, "session file")->required();
  gen->add_option("--truth", gen_truth, "ground-truth file");

  // validate
  auto* val = app.add_subcommand("validate", "screen sessions; exit 2 if any is rejected");
  std::string val_in, val_out;
  val->add_option("--input", val_in, "session file")->required();
  val->add_option("--out", val_out, "write the accepted sessions here");

  // standardize
  auto* stdz = app.add_subcommand("standardize", "resample accepted sessions onto the relative-intensity grid");
  std::string std_in, std_out;
  std::size_t std_k = kDefaultGridSize;
  stdz->add_option("--input", std_in, "session file")->required();
  stdz->add_option("--out", std_out, "standardized series file")->required();
  stdz->add_option("--grid-k", std_k, "grid points")->capture_default_str();

  // split
  auto* spl = app.add_subcommand("split", "train/test plan");
  Shared sp;
  std::string spl_plan;
  spl->add_option("--input", sp.input, "session file")->required();
  spl->add_option("--out", sp.out, "split plan file")->required();
  spl->add_option("--plan", spl_plan, "expert plan (athlete_id,set[,stratum]) for the knowledge method");
  add_workflow_flags(spl, sp, false);

  // tune
  auto* tune = app.add_subcommand("tune", "three-step preliminary tuning on the high-PTS subset");
  Shared tu;
  tune->add_option("--input", tu.input, "session file")->required();
  tune->add_option("--out", tu.out, "output directory")->required();
  tune->add_option("--tuning-restarts", tu.tuning_restarts, "initializations per tuning cell");
  add_workflow_flags(tune, tu, true);

  // train
  auto* trn = app.add_subcommand("train", "grid search (with feature selection for --features auto)");
  Shared tr;
  trn->add_option("--input", tr.input, "session file")->required();
  trn->add_option("--out", tr.out, "output directory")->required();
  trn->add_option("--split", tr.split_file, "split plan file (otherwise a stratified split is drawn)");
  trn->add_option("--truth", tr.truth, "ground-truth file, reported alongside");
  add_workflow_flags(trn, tr, true);

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "applicability report of a saved model");
  std::string ev_in, ev_model, ev_split, ev_truth, ev_out;
  ev->add_option("--input", ev_in, "session file")->required();
  ev->add_option("--model", ev_model, "model file")->required();
  ev->add_option("--split", ev_split, "split plan file");
  ev->add_option("--truth", ev_truth, "ground-truth file");
  ev->add_option("--out", ev_out, "output directory")->required();

  // estimate
  auto* est = app.add_subcommand("estimate", "LT of feature-only sessions with a saved model");
  std::string est_in, est_model, est_out;
  est->add_option("--input", est_in, "session file (lactate optional and ignored)")->required();
  est->add_option("--model", est_model, "model file")->required();
  est->add_option("--out", est_out, "also write the estimates to this file");

  // report
  auto* rep = app.add_subcommand("report", "full workflow: split, tuning, feature selection, ranking, report");
  Shared rp;
  rep->add_option("--input", rp.input, "session file")->required();
  rep->add_option("--out", rp.out, "output directory")->required();
  rep->add_option("--split", rp.split_file, "split plan file (otherwise a stratified split is drawn)");
  rep->add_option("--truth", rp.truth, "ground-truth file, reported alongside");
  rep->add_option("--tuning-restarts", rp.tuning_restarts, "initializations per tuning cell");
  rep->add_flag("--no-tune", rp.no_tune, "skip preliminary tuning and use --hu/--delays");
  add_workflow_flags(rep, rp, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kValidation;
  }

  try {
    if (*gen) {
      const auto cohort = synth::gen_cohort(gen_n, gen_seed, gen_families, gen_opt);
      const std::string params = "n=" + std::to_string(gen_n) + " families=" + std::to_string(gen_families) +
                                 " noise=" + csv::format_number(gen_opt.lactate_noise) +
                                 " hr_noise=" + csv::format_number(gen_opt.hr_noise) +
                                 " position_sd=" + csv::format_number(gen_opt.position_sd) +
                                 " hr_offset_sd=" + csv::format_number(gen_opt.hr_offset_sd);
      const std::string head = provenance_header(gen_seed, csv::hex64(csv::fnv1a(params)));
      csv::write_file(gen_out, head + serialize_sessions(cohort.sessions));
      if (!gen_truth.empty()) csv::write_file(gen_truth, head + synth::serialize_truth(cohort.truth));
      std::cout << "generated " << cohort.sessions.size() << " sessions in " << gen_families << " families\n";
      return kOk;
    }
    if (*val) {
      const auto res = screen(load_sessions(val_in));
      std::cout << "accepted " << res.accepted.size() << ", rejected " << res.rejected.size() << '\n';
      for (const auto& r : res.rejected)
        std::cout << "rejected " << r.athlete_id << ' ' << to_string(r.rule) << ": " << r.message << '\n';
      if (!val_out.empty()) {
        std::vector<TestSession> ok;
        for (const auto& s : res.accepted) ok.push_back(s.session());
        csv::write_file(val_out, serialize_sessions(ok));
      }
      return res.rejected.empty() ? kOk : kValidation;
    }
    if (*stdz) {
      const auto res = screen(load_sessions(std_in));
      csv::write_file(std_out, serialize_standardized(standardize(res.accepted, std_k)));
      std::cout << "standardized " << res.accepted.size() << " sessions onto " << std_k << " points\n";
      return kOk;
    }
    if (*spl) {
      if (!spl_plan.empty()) sp.split_file = spl_plan;
      const PipelineConfig cfg = resolve(sp);
      const auto res = screen(load_sessions(sp.input));
      std::optional<Strata> strata;
      const SplitPlan plan = make_split(res.accepted, cfg, &strata);
      std::vector<std::string> order;
      for (const auto& s : res.accepted) order.push_back(s.athlete_id());
      csv::write_file(sp.out, provenance_header(cfg.seed, config_hash(cfg)) + serialize_split(plan, order));
      std::cout << "train " << plan.train_ids.size() << ", test " << plan.test_ids.size();
      if (strata) std::cout << ", strata " << strata->n_strata;
      std::cout << '\n';
      for (const auto& w : plan.warnings) std::cerr << "warning: " << w << '\n';
      return kOk;
    }
    if (*tune) {
      const PipelineConfig cfg = resolve(tu);
      const auto res = screen(load_sessions(tu.input));
      const auto ids = tuning_subset(res.accepted, cfg.tuning_min_pts, cfg.tuning_max_athletes);
      std::vector<ValidatedSession> sub;
      for (const auto& s : res.accepted)
        if (std::find(ids.begin(), ids.end(), s.athlete_id()) != ids.end()) sub.push_back(s);
      TrainOptions o = cfg.train;
      o.seed = derive_seed(cfg.seed, 2);
      o.restarts = cfg.tuning_restarts;
      const auto t = preliminary_tuning(make_workbench(sub, cfg.grid_k), cfg.tuning_plan,
                                        cfg.features.value_or(FeatureSet::None), o, cfg.jobs);
      const auto dir = out_dir(tu.out);
      const std::string head = provenance_header(cfg.seed, config_hash(cfg));
      std::string summary = head + "stage,hu,delays,cells,best_hu,best_delays,heuristic_pct,pearson_r\n";
      for (std::size_t i = 0; i < t.stages.size(); ++i) {
        const auto& st = t.stages[i];
        csv::write_file((dir / ("tuning_stage" + std::to_string(i + 1) + ".csv")).string(), grid_file(st.grid, head));
        summary += st.stage.name + ',' + format_int_list(st.stage.hidden_units) + ',' +
                   format_int_list(st.stage.delays) + ',' + std::to_string(st.grid.cells.size()) + ',' +
                   std::to_string(st.best.hidden_units) + ',' + std::to_string(st.best.delays) + ',' +
                   csv::format_number(st.best.heuristic_pct) + ',' + csv::format_number(st.best.pearson_r) + '\n';
      }
      csv::write_file((dir / "tuning.csv").string(), summary);
      std::cout << "tuning subset " << sub.size() << " athletes; surviving range HU " << t.hu_min << '-' << t.hu_max
                << ", delays " << t.delay_min << '-' << t.delay_max << '\n';
      return kOk;
    }
    if (*trn || *rep) {
      Shared& s = *trn ? tr : rp;
      if (*trn) s.no_tune = true;
      const PipelineConfig cfg = resolve(s);
      const auto sessions = load_sessions(s.input);
      std::optional<std::map<std::string, double>> truth;
      if (!s.truth.empty()) truth = load_truth(s.truth);
      const auto t0 = std::chrono::steady_clock::now();
      const PipelineResult r = run_pipeline(sessions, cfg, truth ? &*truth : nullptr);
      const auto dir = out_dir(s.out);
      write_run_outputs(dir, r, cfg);
      print_summary(r);
      std::cerr << "elapsed " << csv::format_fixed(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 1)
                << " s\n";
      return kOk;
    }
    if (*ev) {
      const LrnnModel model = parse_model(csv::read_file(ev_model));
      const auto res = screen(load_sessions(ev_in));
      std::vector<std::string> ids;
      for (const auto& v : res.accepted) ids.push_back(v.athlete_id());
      std::optional<SplitPlan> plan;
      if (!ev_split.empty()) plan = knowledge_split(csv::read_file(ev_split), ids);
      std::optional<std::map<std::string, double>> truth;
      if (!ev_truth.empty()) truth = load_truth(ev_truth);
      std::vector<std::string> excluded;
      const Workbench wb = make_workbench(res.accepted, model.grid_size, plan ? &*plan : nullptr,
                                          truth ? &*truth : nullptr, &excluded);
      const ApplicabilityReport ar = applicability_report(model, wb);
      const auto dir = out_dir(ev_out);
      const std::string head = "# ltest " + std::string(kVersion) + " model=" +
                               csv::hex64(csv::fnv1a(serialize_model(model))) + '\n';
      std::string text = head + "Final model performance against tested LT\n" + detail::table(
          {"", "Global", "Train", "Test"},
          {{"% individualization", detail::pct(ar.tested.global.heuristic_pct),
            detail::pct(ar.tested.train.heuristic_pct), detail::pct(ar.tested.test.heuristic_pct)},
           {"Pearson R", detail::r2(ar.tested.global.pearson_r), detail::r2(ar.tested.train.pearson_r),
            detail::r2(ar.tested.test.pearson_r)}});
      text += "  train-test parity: " + detail::pct(ar.parity_delta) + " points\n";
      if (ar.truth) {
        text += "Final model performance against ground-truth LT\n" + detail::performance_table(*ar.truth);
      }
      text += "failed: " + std::to_string(ar.failed.size()) + ", passed: " + std::to_string(ar.passed.size()) + '\n';
      csv::write_file((dir / "evaluation.txt").string(), text);
      csv::write_file((dir / "athletes.csv").string(), outcomes_file(ar.athletes, head));
      csv::write_file((dir / "curves.csv").string(), curves_file(model, wb, head));
      std::cout << text.substr(head.size());
      return kOk;
    }
    if (*est) {
      const LrnnModel model = parse_model(csv::read_file(est_model));
      std::string out = "athlete_id,lt_rel_intensity,lt_speed_kmh,lt_pace_s_per_km\n";
      for (const auto& s : load_sessions(est_in)) {
        const ThresholdPoint t = estimate_session(model, s);
        out += s.athlete_id + ',' + csv::format_fixed(t.x_at_lt, 4) + ',' + csv::format_fixed(t.x_at_lt * s.pts(), 3) +
               ',' + csv::format_fixed(t.pace_at_lt, 1) + '\n';
      }
      std::cout << out;
      if (!est_out.empty()) csv::write_file(est_out, out);
      return kOk;
    }
  } catch (const Error& e) {
    std::cerr << "ltest: error " << to_string(e.code()) << ": " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "ltest: error INTERNAL: " << e.what() << '\n';
    return kTraining;
  }
  return kOk;
}
