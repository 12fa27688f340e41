#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <CLI11.hpp>

#include "piou/annot_io.hpp"
#include "piou/gradcheck.hpp"
#include "piou/harness.hpp"
#include "piou/matching.hpp"
#include "piou/parallel.hpp"
#include "piou/pixel_oracle.hpp"
#include "piou/polygon.hpp"
#include "piou/report.hpp"

namespace piou::cli {

namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Settings shared by every subcommand; overridable from a key=value file.
struct Config {
  double k = 10.0;
  std::string half_extent = "corrected";
  std::string union_mode = "soft";
  int supersample = 4;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string config_file;

  KernelConfig kernel() const {
    KernelConfig cfg;
    cfg.k = k;
    cfg.half_extent = half_extent == "literal" ? HalfExtentMode::literal
                                               : HalfExtentMode::corrected;
    cfg.union_mode = union_mode == "hard" ? UnionMode::hard : UnionMode::soft;
    cfg.validate();
    return cfg;
  }

  fs::path output(const std::string& command, const std::string& ext) const {
    return fs::path(out_dir) / (command + "-" + std::to_string(seed) + ext);
  }
};

// Registers the shared flags on a subcommand and remembers which option
// backs each config-file key.
class CommonFlags {
 public:
  CommonFlags(CLI::App* cmd, Config& cfg) : cmd_(cmd), cfg_(cfg) {
    opts_["k"] = cmd->add_option("--k", cfg.k, "Kernel sensitivity factor")
                     ->check(CLI::PositiveNumber)
                     ->capture_default_str();
    opts_["half_extent"] =
        cmd->add_option("--half-extent", cfg.half_extent,
                        "Kernel threshold: corrected (w/2, h/2) or literal (w, h)")
            ->check(CLI::IsMember({"corrected", "literal"}))
            ->capture_default_str();
    opts_["union"] = cmd->add_option("--union", cfg.union_mode,
                                     "Union: soft (pixel sum) or hard (w*h + w'*h' - I)")
                         ->check(CLI::IsMember({"soft", "hard"}))
                         ->capture_default_str();
    opts_["supersample"] =
        cmd->add_option("--supersample", cfg.supersample,
                        "Samples per pixel side for the pixel oracle")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
    opts_["out"] = cmd->add_option("--out-dir", cfg.out_dir, "Output directory")
                       ->capture_default_str();
    opts_["seed"] = cmd->add_option("--seed", cfg.seed, "Random seed")
                        ->capture_default_str();
    opts_["threads"] =
        cmd->add_option("--threads", cfg.threads,
                        "Worker threads (0: PIOU_THREADS or logical CPUs)")
            ->capture_default_str();
    cmd->add_option("--config", cfg.config_file,
                    "key=value settings file; flags given on the command line win");
  }

  /// Applies config-file values to settings not given as flags.
  void apply_file() {
    // Every subcommand writes into the same Config; only the invoked one may.
    if (!cmd_->parsed() || cfg_.config_file.empty()) return;
    std::ifstream in(cfg_.config_file);
    if (!in) throw UsageError("cannot read config file " + cfg_.config_file);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto eq = line.find('=');
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      if (eq == std::string::npos) {
        throw UsageError(cfg_.config_file + ":" + std::to_string(n) +
                         ": expected key = value");
      }
      std::string key = trim(line.substr(0, eq));
      std::string value = trim(line.substr(eq + 1));
      if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
        value = value.substr(1, value.size() - 2);
      }
      std::replace(key.begin(), key.end(), '-', '_');
      if (key == "out_dir") key = "out";
      if (key == "union_mode") key = "union";
      const auto it = opts_.find(key);
      if (it == opts_.end()) {
        throw UsageError(cfg_.config_file + ":" + std::to_string(n) +
                         ": unknown key " + key);
      }
      if (it->second->count() > 0) continue;
      try {
        it->second->clear();
        it->second->add_result(value);
        it->second->run_callback();
      } catch (const CLI::Error& e) {
        throw UsageError(cfg_.config_file + ":" + std::to_string(n) + ": " +
                         e.what());
      }
    }
  }

 private:
  static std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  }

  CLI::App* cmd_;
  Config& cfg_;
  std::map<std::string, CLI::Option*> opts_;
};

Obb parse_box(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(item, &used);
    } catch (const std::exception&) {
      throw UsageError("malformed box \"" + text + "\": expected cx,cy,w,h,theta_deg");
    }
    if (item.find_first_not_of(" \t", used) != std::string::npos) {
      throw UsageError("malformed box \"" + text + "\": expected cx,cy,w,h,theta_deg");
    }
    v.push_back(x);
  }
  if (v.size() != 5) {
    throw UsageError("malformed box \"" + text + "\": expected 5 values");
  }
  try {
    return Obb(v[0], v[1], v[2], v[3], v[4] * kPi / 180.0);
  } catch (const std::invalid_argument& e) {
    throw UsageError("malformed box \"" + text + "\": " + e.what());
  }
}

template <class Fn>
std::string render(Fn&& fn) {
  std::ostringstream os;
  fn(os);
  return os.str();
}

AnnotationFormat format_for(const std::string& name, const fs::path& path) {
  if (name == "csv") return AnnotationFormat::csv;
  if (name == "jsonl") return AnnotationFormat::json_lines;
  return path.extension() == ".csv" ? AnnotationFormat::csv
                                    : AnnotationFormat::json_lines;
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pixel-IoU tools for oriented bounding boxes", "piou"};
  app.require_subcommand(1);

  Config cfg;

  // iou
  auto* iou = app.add_subcommand("iou", "IoU of two boxes (cx,cy,w,h,theta_deg)");
  CommonFlags iou_flags(iou, cfg);
  std::string box_a, box_b, method = "exact";
  iou->add_option("--a", box_a, "First box cx,cy,w,h,theta_deg")->required();
  iou->add_option("--b", box_b, "Second box cx,cy,w,h,theta_deg")->required();
  iou->add_option("--method", method, "exact, pixel or piou")
      ->check(CLI::IsMember({"exact", "pixel", "piou"}))
      ->capture_default_str();

  // gradcheck
  auto* gradcheck = app.add_subcommand(
      "gradcheck", "Compare analytic PIoU gradients with finite differences");
  CommonFlags gc_flags(gradcheck, cfg);
  std::size_t gc_count = 200;
  double gc_threshold = 1e-4;
  gradcheck->add_option("--count", gc_count, "Number of fuzzed cases")
      ->capture_default_str();
  gradcheck->add_option("--threshold", gc_threshold,
                        "Fail when any relative error is not below this")
      ->capture_default_str();

  // fit
  auto* fitcmd = app.add_subcommand("fit", "Regress one scenario with one loss");
  CommonFlags fit_flags(fitcmd, cfg);
  std::string scenario = "ratio20-comb", loss_name = "piou", optimizer = "gd";
  double lr = 1.0;
  int max_steps = 2000;
  fitcmd->add_option("--scenario", scenario, "Scenario id, e.g. ratio20-rot or h-ratio5-trans")
      ->capture_default_str();
  fitcmd->add_option("--loss", loss_name, "piou, hpiou, l1, l2, smooth_l1 or giou")
      ->capture_default_str();

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Run losses and k values over a scenario suite");
  CommonFlags sweep_flags(sweep, cfg);
  std::vector<double> ks{5.0, 10.0, 15.0};
  std::vector<std::string> losses{"piou"};
  std::vector<std::string> scenario_ids{"all"};
  bool horizontal = false;
  sweep->add_option("--ks", ks, "Comma-separated k values for piou/hpiou")
      ->delimiter(',')
      ->capture_default_str();
  sweep->add_option("--losses", losses, "Comma-separated losses")
      ->delimiter(',')
      ->capture_default_str();
  sweep->add_option("--scenarios", scenario_ids, "Comma-separated ids, or all")
      ->delimiter(',')
      ->capture_default_str();
  sweep->add_flag("--horizontal", horizontal, "Use the horizontal (theta = 0) suite");

  for (CLI::App* cmd : {fitcmd, sweep}) {
    cmd->add_option("--optimizer", optimizer, "gd or gd_momentum")
        ->check(CLI::IsMember({"gd", "gd_momentum", "momentum"}))
        ->capture_default_str();
    cmd->add_option("--lr", lr, "First trial step length")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--max-steps", max_steps, "Iteration budget")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  }

  // fig1
  auto* fig1 = app.add_subcommand(
      "fig1", "Emit box triples with equal SmoothL1 but different IoU");
  CommonFlags fig1_flags(fig1, cfg);

  // convert
  auto* convert = app.add_subcommand("convert", "Convert quadrilateral annotations to OBB CSV");
  CommonFlags convert_flags(convert, cfg);
  std::string in_path, out_path, in_format = "auto";
  convert->add_option("--in", in_path, "Annotation file")->required();
  convert->add_option("--out", out_path,
                      "Output CSV (default: <out-dir>/convert-<seed>.csv)");
  convert->add_option("--format", in_format, "Input format: auto, jsonl or csv")
      ->check(CLI::IsMember({"auto", "jsonl", "csv"}))
      ->capture_default_str();

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic annotation set");
  CommonFlags synth_flags(synth, cfg);
  std::size_t synth_n = 100;
  double median_ratio = 20.0;
  std::string synth_format = "csv";
  synth->add_option("--n", synth_n, "Number of records")->capture_default_str();
  synth->add_option("--median-ratio", median_ratio, "Median long/short side ratio")
      ->check(CLI::Range(1.0, 1e6))
      ->capture_default_str();
  synth->add_option("--format", synth_format, "csv or jsonl")
      ->check(CLI::IsMember({"csv", "jsonl"}))
      ->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    CLI::App* target = &app;
    for (CLI::App* sub : app.get_subcommands()) target = sub;
    out << target->help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    for (CommonFlags* f : {&iou_flags, &gc_flags, &fit_flags, &sweep_flags,
                           &fig1_flags, &convert_flags, &synth_flags}) {
      f->apply_file();
    }
    const unsigned threads = resolve_threads(cfg.threads);

    if (iou->parsed()) {
      const Obb a = parse_box(box_a);
      const Obb b = parse_box(box_b);
      double value = 0.0;
      if (method == "exact") {
        value = exact_iou(a, b);
      } else if (method == "pixel") {
        value = hard_overlap(a, b, cfg.supersample).iou;
      } else {
        value = soft_overlap(a, b, cfg.kernel(), false).piou;
      }
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.6f", value);
      out << "method=" << method << " iou=" << buf << "\n";
      return kExitOk;
    }

    if (gradcheck->parsed()) {
      GradCheckOptions opt;
      opt.count = gc_count;
      opt.seed = cfg.seed;
      opt.threshold = gc_threshold;
      opt.threads = threads;
      const auto cases = run_gradcheck(opt);
      const fs::path path = cfg.output("gradcheck", ".csv");
      write_file_atomic(path, render([&](std::ostream& os) { write_gradcheck_csv(os, cases); }));
      const bool pass = std::all_of(cases.begin(), cases.end(), [&](const GradCheckCase& c) {
        return c.rel_error < gc_threshold;
      });
      const auto disjoint = std::count_if(cases.begin(), cases.end(),
                                          [](const GradCheckCase& c) { return c.disjoint; });
      out << "cases=" << cases.size() << " disjoint=" << disjoint
          << " max_rel_error=" << format_double(max_rel_error(cases))
          << " threshold=" << format_double(gc_threshold) << " "
          << (pass ? "PASS" : "FAIL") << " -> " << path.string() << "\n";
      return pass ? kExitOk : kExitFailure;
    }

    if (fitcmd->parsed()) {
      const Scenario sc = find_scenario(scenario);
      LossSpec spec;
      spec.kind = parse_loss_kind(loss_name);
      spec.kernel = cfg.kernel();
      if (sc.horizontal) spec.mask[static_cast<std::size_t>(Param::theta)] = false;
      if (spec.kind == LossKind::giou_horizontal && !sc.horizontal) {
        throw UsageError("giou needs a horizontal scenario (h-...)");
      }
      FitOptions fo;
      fo.optimizer = parse_optimizer(optimizer);
      fo.lr = lr;
      fo.max_steps = max_steps;
      fo.seed = cfg.seed;
      const FitTrace trace = fit(sc.init, sc.target, spec, fo);

      const fs::path csv_path = cfg.output("fit", ".csv");
      write_file_atomic(csv_path, render([&](std::ostream& os) { write_trace_csv(os, trace); }));
      Series iou_series{sc.id, {}, {}};
      Series loss_series{sc.id, {}, {}};
      for (const FitRecord& r : trace.records) {
        iou_series.x.push_back(r.step);
        iou_series.y.push_back(r.exact_iou);
        loss_series.x.push_back(r.step);
        loss_series.y.push_back(r.loss);
      }
      const std::string title = sc.id + " / " + std::string(to_string(spec.kind));
      const LinePlot iou_plot{title, "step", "exact IoU", {iou_series}};
      const LinePlot loss_plot{title, "step", "loss", {loss_series}};
      write_file_atomic(cfg.output("fit", ".svg"),
                        render([&](std::ostream& os) { iou_plot.write_svg(os); }));
      write_file_atomic(cfg.output("fit", "-loss.svg"),
                        render([&](std::ostream& os) { loss_plot.write_svg(os); }));
      const auto reach = trace.steps_to_iou(0.9);
      out << "scenario=" << sc.id << " loss=" << to_string(spec.kind)
          << " status=" << to_string(trace.status)
          << " steps=" << trace.last().step
          << " final_iou=" << format_double(trace.last().exact_iou)
          << " steps_to_0.9=" << (reach ? std::to_string(*reach) : "none")
          << " -> " << csv_path.string() << "\n";
      return kExitOk;
    }

    if (sweep->parsed()) {
      std::vector<Scenario> suite = horizontal ? horizontal_scenarios() : standard_scenarios();
      if (!(scenario_ids.size() == 1 && scenario_ids[0] == "all")) {
        std::vector<Scenario> picked;
        for (const std::string& id : scenario_ids) picked.push_back(find_scenario(id));
        suite = std::move(picked);
      }
      std::vector<LossSpec> specs;
      for (const std::string& name : losses) {
        LossSpec spec;
        spec.kind = parse_loss_kind(name);
        spec.kernel = cfg.kernel();
        if (spec.kind == LossKind::piou || spec.kind == LossKind::hpiou) {
          if (ks.empty()) throw UsageError("--ks is empty");
          for (double k : ks) {
            spec.kernel.k = k;
            specs.push_back(spec);
          }
        } else {
          specs.push_back(spec);
        }
      }
      FitOptions fo;
      fo.optimizer = parse_optimizer(optimizer);
      fo.lr = lr;
      fo.max_steps = max_steps;
      fo.seed = cfg.seed;
      const auto reports = run_suite(suite, specs, fo, threads);

      const fs::path csv_path = cfg.output("sweep", ".csv");
      write_file_atomic(csv_path, render([&](std::ostream& os) { write_reports_csv(os, reports); }));
      write_file_atomic(cfg.output("sweep", "-timing.csv"),
                        render([&](std::ostream& os) { write_timing_csv(os, reports); }));
      LinePlot plot{"final exact IoU per scenario", "scenario index", "final IoU", {}};
      for (std::size_t s = 0; s < specs.size(); ++s) {
        Series series;
        series.label = std::string(to_string(specs[s].kind));
        if (specs[s].kind == LossKind::piou || specs[s].kind == LossKind::hpiou) {
          series.label += " k=" + format_double(specs[s].kernel.k);
        }
        for (std::size_t i = 0; i < suite.size(); ++i) {
          series.x.push_back(static_cast<double>(i));
          series.y.push_back(reports[i * specs.size() + s].final_iou);
        }
        plot.series.push_back(std::move(series));
      }
      write_file_atomic(cfg.output("sweep", ".svg"),
                        render([&](std::ostream& os) { plot.write_svg(os); }));
      out << "runs=" << reports.size() << " -> " << csv_path.string() << "\n";
      return kExitOk;
    }

    if (fig1->parsed()) {
      const auto triples = fig1_pairs();
      const fs::path path = cfg.output("fig1", ".csv");
      const KernelConfig kc = cfg.kernel();
      write_file_atomic(path, render([&](std::ostream& os) { write_fig1_csv(os, triples, kc); }));
      out << "triples=" << triples.size() << " -> " << path.string() << "\n";
      return kExitOk;
    }

    if (convert->parsed()) {
      std::ifstream in(in_path, std::ios::binary);
      if (!in) throw UsageError("cannot read " + in_path);
      const auto records = parse_annotations(in, format_for(in_format, in_path));
      for (const AnnotationRecord& rec : records) {
        for (const std::string& w : rec.warnings) {
          err << "warning: " << rec.image_id << ": " << w << "\n";
        }
      }
      const fs::path path = out_path.empty() ? cfg.output("convert", ".csv") : fs::path(out_path);
      write_file_atomic(path, render([&](std::ostream& os) { write_obb_csv(os, records); }));
      std::size_t boxes = 0;
      for (const auto& r : records) boxes += r.boxes.size();
      out << "records=" << records.size() << " boxes=" << boxes << " -> "
          << path.string() << "\n";
      return kExitOk;
    }

    if (synth->parsed()) {
      SynthConfig sc;
      sc.median_ratio = median_ratio;
      sc.ratio_range = {std::min(sc.ratio_range[0], median_ratio),
                        std::max(sc.ratio_range[1], median_ratio)};
      const auto records = synth_dataset(synth_n, cfg.seed, sc);
      const bool csv = synth_format == "csv";
      const fs::path path = cfg.output("synth", csv ? ".csv" : ".jsonl");
      write_file_atomic(path, render([&](std::ostream& os) {
                          write_annotations(os, records,
                                            csv ? AnnotationFormat::csv
                                                : AnnotationFormat::json_lines);
                        }));
      out << "records=" << records.size() << " -> " << path.string() << "\n";
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const GridTooLarge& e) {
    err << "error: " << e.what() << "\n";
    return kExitBudget;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace piou::cli
