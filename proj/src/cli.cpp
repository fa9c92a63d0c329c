#include "fvpinn/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>

#include "fvpinn/case.hpp"
#include "fvpinn/diagnostics.hpp"
#include "fvpinn/io.hpp"

namespace fvpinn {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct Failure {
  int code;
  std::string kind;
  std::string message;
};

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

std::string field_csv(const Domain& d, const State& s, double t) {
  std::ostringstream o;
  o << "cell_id,x,y,t,h,u,v,xi,uh,vh\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Primitive<double> w = recover_primitives(s.at(i), d.bathy.h_s[i], d.phys);
    const Cell& c = d.mesh.cells[i];
    o << i << ',' << format_double(c.centroid[0]) << ',' << format_double(c.centroid[1]) << ','
      << format_double(t) << ',' << format_double(s.xi[i] + d.bathy.h_s[i]) << ','
      << format_double(w.u) << ',' << format_double(w.v) << ',' << format_double(s.xi[i]) << ','
      << format_double(s.uh[i]) << ',' << format_double(s.vh[i]) << '\n';
  }
  return o.str();
}

std::string checkpoint_name(int windows, int k) {
  return windows == 1 ? "checkpoint.txt" : "checkpoint_w" + std::to_string(k) + ".txt";
}

/// Loads the trained surrogate (single or windowed) from the output dir.
struct Trained {
  SurrogateNetwork net;
  WindowResult windows;
};

Trained load_trained(const Case& c) {
  Trained t;
  t.windows.plan = WindowPlan::uniform(c.t0, c.t1, c.windows);
  for (int k = 0; k < c.windows; ++k) {
    auto [net, p] = load_checkpoint(join(c.output_dir, checkpoint_name(c.windows, k)));
    if (k == 0) t.net = std::move(net);
    t.windows.params.push_back(std::move(p));
  }
  return t;
}

int cmd_mesh_gen(const Config& cfg, const Case&, std::ostream& out, const std::string& dir) {
  const Mesh mesh = build_mesh_from_config(cfg);
  const AuditReport a = geometry_audit(mesh);
  write_file_atomic(join(dir, "mesh.swemesh"), format_mesh(mesh));
  out << json{{"status", "ok"},
              {"cells", mesh.cells.size()},
              {"faces", mesh.faces.size()},
              {"audit_passes", a.passes},
              {"max_closure_defect", a.max_closure_defect},
              {"min_area", a.min_area}}
             .dump()
      << '\n';
  return a.passes ? kExitOk : kExitNumerical;
}

int cmd_teacher(const Case& c, std::ostream& out, const std::string& dir) {
  const Trajectory tr = run_teacher(c.domain, c.ic, c.teacher);
  const std::string tdir = join(dir, "teacher");
  write_trajectory(tdir, tr);
  const ConservationReport audit = conservation_audit(tr, c.domain);
  std::ostringstream csv;
  csv << "t0,t1,mass_change,boundary_inflow,abs_error,rel_error\n";
  for (const auto& iv : audit.intervals)
    csv << format_double(iv.t0) << ',' << format_double(iv.t1) << ','
        << format_double(iv.mass_change) << ',' << format_double(iv.boundary_inflow) << ','
        << format_double(iv.abs_error) << ',' << format_double(iv.rel_error) << '\n';
  write_file_atomic(join(tdir, "conservation.csv"), csv.str());
  out << json{{"status", "ok"},
              {"snapshots", tr.times.size()},
              {"steps", tr.steps},
              {"max_rel_mass_error", audit.max_rel_error}}
             .dump()
      << '\n';
  return kExitOk;
}

int cmd_train(const Case& c, std::ostream& out, const std::string& dir) {
  const Normalizer nz = Normalizer::from_mesh(c.domain.mesh, c.t0, c.t1);
  auto [net, params] = init_network(c.network, c.init_seed, nz);
  TrainProblem prob{&c.domain, &net, c.data};
  auto progress = [](const HistoryRow& r) {
    if (r.step % 500 == 0)
      std::cerr << "step " << r.step << " " << r.phase << " loss " << r.loss.total << '\n';
  };
  try {
    if (c.windows == 1) {
      TrainResult r = train_standard(prob, std::move(params), c.train, Execution::parallel, progress);
      save_checkpoint(join(dir, checkpoint_name(1, 0)), net, r.params);
      write_file_atomic(join(dir, "history.csv"), r.history.to_csv());
      out << json{{"status", "ok"},
                  {"steps", r.history.rows.size()},
                  {"final_loss", r.history.rows.empty() ? 0.0 : r.history.rows.back().loss.total}}
                 .dump()
          << '\n';
    } else {
      const WindowPlan plan = WindowPlan::uniform(c.t0, c.t1, c.windows);
      WindowResult w = train_windows(prob, std::move(params), c.train, plan, Execution::parallel, progress);
      for (int k = 0; k < c.windows; ++k)
        save_checkpoint(join(dir, checkpoint_name(c.windows, k)), net, w.params[static_cast<std::size_t>(k)]);
      write_file_atomic(join(dir, "history.csv"), w.history.to_csv());
      out << json{{"status", "ok"}, {"windows", c.windows}, {"steps", w.history.rows.size()}}.dump()
          << '\n';
    }
  } catch (const TrainingError& e) {
    save_checkpoint(join(dir, "checkpoint_last_good.txt"), net, e.last_good());
    throw;
  }
  return kExitOk;
}

int cmd_eval(const Case& c, std::ostream& out, const std::string& dir) {
  const Trained t = load_trained(c);
  std::vector<ErrorEntry> rows;
  json summary = json::array();
  for (double time : c.eval.times) {
    if (time < c.t0 || time > c.t1) throw std::invalid_argument("eval time outside [t0, T]");
    const State pred = predict_windows(t.net, t.windows, c.domain, time);
    const State ref = reference_state(c, time);
    const auto e = error_report(c.domain, pred, ref, time);
    rows.insert(rows.end(), e.begin(), e.end());
    write_file_atomic(join(dir, "field_t" + format_double(time) + ".csv"), field_csv(c.domain, pred, time));
    summary.push_back({{"time", time}, {"l2_h", e[0].l2}, {"linf_h", e[0].linf}, {"l2_speed", e[1].l2}});
  }
  write_file_atomic(join(dir, "errors.csv"), format_error_report(rows));
  out << json{{"status", "ok"}, {"reference", c.eval.reference}, {"errors", summary}}.dump() << '\n';
  return kExitOk;
}

int cmd_landscape(const Case& c, std::ostream& out, const std::string& dir) {
  if (c.windows != 1) throw std::invalid_argument("landscape needs a single-window checkpoint");
  auto [net, params] = load_checkpoint(join(dir, "checkpoint.txt"));
  LossEvaluator ev(c.domain, net, c.data, c.train.weights);
  std::mt19937_64 rng(c.landscape.seed);
  const auto times = sample_times(c.landscape.n_t, c.t0, c.t1, rng);
  const LandscapeCurve curve = alpha_sweep(ev, params, c.landscape.alphas, times);
  write_file_atomic(join(dir, "landscape.csv"), curve.to_csv());
  out << json{{"status", "ok"}, {"points", curve.alpha.size()}}.dump() << '\n';
  return kExitOk;
}

int cmd_gradcheck(const Case& c, std::ostream& out, const std::string& dir) {
  const Normalizer nz = Normalizer::from_mesh(c.domain.mesh, c.t0, c.t1);
  auto [net, params] = init_network(c.network, c.init_seed, nz);
  // Perturb biases away from zero so every parameter carries signal.
  std::mt19937_64 rng(c.gradcheck.seed);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (const LayerShape& L : net.layers)
    for (int o = 0; o < L.n_out; ++o) params[L.b_offset + static_cast<std::size_t>(o)] = u(rng);
  LossEvaluator ev(c.domain, net, c.data, c.train.weights, Execution::serial);
  const auto times = sample_times(c.gradcheck.n_t, c.t0, c.t1, rng);
  std::vector<std::size_t> idx;
  if (c.gradcheck.samples > 0 && static_cast<std::size_t>(c.gradcheck.samples) < params.size()) {
    std::uniform_int_distribution<std::size_t> pick(0, params.size() - 1);
    for (int k = 0; k < c.gradcheck.samples; ++k) idx.push_back(pick(rng));
  }
  const GradcheckReport r = gradient_check(ev, params, times, c.gradcheck.step, idx);
  const bool ok = r.max_rel_error <= c.gradcheck.tolerance;
  const json j{{"status", ok ? "ok" : "failed"},
               {"checked", r.indices.size()},
               {"max_rel_error", r.max_rel_error},
               {"worst_index", r.worst},
               {"tolerance", c.gradcheck.tolerance}};
  write_file_atomic(join(dir, "gradcheck.json"), j.dump(2) + "\n");
  out << j.dump() << '\n';
  return ok ? kExitOk : kExitNumerical;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Finite-volume physics-informed training for the shallow water equations"};
  app.set_help_flag("-h,--help");
  std::string command, config_path, out_dir;
  std::vector<std::string> overrides;
  long seed = -1;
  app.add_option("command", command, "mesh-gen | teacher | train | eval | landscape | gradcheck")
      ->required()
      ->check(CLI::IsMember({"mesh-gen", "teacher", "train", "eval", "landscape", "gradcheck"}));
  app.add_option("config", config_path, "case configuration file")->required();
  app.add_option("overrides", overrides, "section.key=value overrides");
  app.add_option("--out", out_dir, "output directory (overrides case.output)");
  app.add_option("--seed", seed, "sets network.seed and train.seed");

  auto fail = [&](const Failure& f) {
    err << json{{"status", "error"}, {"code", f.code}, {"kind", f.kind}, {"message", f.message}}.dump()
        << '\n';
    return f.code;
  };

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    return fail({kExitUsage, "usage", e.what()});
  }

  try {
    Config cfg = [&] {
      try {
        return Config::load(config_path);
      } catch (const InputError& e) {
        throw Failure{kExitMissingInput, "missing_input", e.what()};
      }
    }();
    for (const auto& o : overrides) cfg.apply_override(o);
    if (seed >= 0) {
      cfg.set("network.seed", std::to_string(seed));
      cfg.set("train.seed", std::to_string(seed));
    }
    if (!out_dir.empty()) cfg.set("case.output", fs::absolute(out_dir).string());

    const bool needs_data = command == "train" || command == "landscape" || command == "gradcheck";
    Case c;
    if (command != "mesh-gen") c = build_case(cfg, needs_data);
    const std::string dir = cfg.has("case.output") ? cfg.get_path("case.output") : "out";
    const auto unused = cfg.unused_keys();
    if (command != "mesh-gen" && !unused.empty()) {
      std::string list;
      for (const auto& k : unused) list += (list.empty() ? "" : ", ") + k;
      throw ConfigError("unknown configuration keys: " + list);
    }

    if (command == "mesh-gen") return cmd_mesh_gen(cfg, c, out, dir);
    if (command == "teacher") return cmd_teacher(c, out, dir);
    if (command == "train") return cmd_train(c, out, dir);
    if (command == "eval") return cmd_eval(c, out, dir);
    if (command == "landscape") return cmd_landscape(c, out, dir);
    return cmd_gradcheck(c, out, dir);
  } catch (const Failure& f) {
    return fail(f);
  } catch (const InputError& e) {
    return fail({kExitMissingInput, "missing_input", e.what()});
  } catch (const ConfigError& e) {
    return fail({kExitConfig, "config", e.what()});
  } catch (const MeshError& e) {
    return fail({kExitConfig, "config", e.what()});
  } catch (const TeacherError& e) {
    return fail({kExitNumerical, "numerical", e.what()});
  } catch (const TrainingError& e) {
    return fail({kExitNumerical, "numerical", e.what()});
  } catch (const ad::NonFiniteError& e) {
    return fail({kExitNumerical, "numerical", e.what()});
  } catch (const CheckpointError& e) {
    return fail({kExitConfig, "checkpoint", e.what()});
  } catch (const std::invalid_argument& e) {
    return fail({kExitConfig, "config", e.what()});
  } catch (const std::exception& e) {
    return fail({kExitNumerical, "runtime", e.what()});
  }
}

}  // namespace fvpinn
