#include "liteie/cli.hpp"

#include <omp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "liteie/bench.hpp"
#include "liteie/enhance.hpp"
#include "liteie/errors.hpp"
#include "liteie/grad.hpp"
#include "liteie/image_io.hpp"
#include "liteie/metrics.hpp"
#include "liteie/net.hpp"
#include "liteie/train.hpp"

namespace liteie {

namespace {

std::string fmt(const char* f, ...) {
  char buf[256];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt("%.6g", v);
}

// filename -> full path for every .png/.ppm in dir.
std::map<std::string, std::string> image_map(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw NotFound("not a directory: " + dir);
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char ch) { return std::tolower(ch); });
    if (ext == ".png" || ext == ".ppm")
      out[e.path().filename().string()] = e.path().string();
  }
  return out;
}

struct EvalSummary {
  double psnr = 0, ssim = 0, mae = 0, mse = 0;
  int pairs = 0;
};

// Enhances every filename-matched low/gt pair and reports per-image metrics.
EvalSummary run_eval(const Weights& w, const std::string& low_dir,
                     const std::string& gt_dir, const EnhanceConfig& cfg,
                     std::ostream* csv) {
  auto low = image_map(low_dir);
  auto gt = image_map(gt_dir);
  for (const auto& [name, path] : low)
    if (!gt.count(name))
      std::cerr << "unmatched: " << name << " (no ground truth)\n";
  for (const auto& [name, path] : gt)
    if (!low.count(name)) std::cerr << "unmatched: " << name << " (no input)\n";

  if (csv) (*csv) << "image, psnr, ssim, mae, mse\n";
  EvalSummary sum;
  for (const auto& [name, path] : low) {
    auto it = gt.find(name);
    if (it == gt.end()) continue;
    ImageTensor enhanced = enhance_image(w, load_image(path), cfg);
    MetricsReport m = compute_metrics(enhanced, load_image(it->second));
    if (csv)
      (*csv) << name << ", " << num(m.psnr) << ", " << num(m.ssim) << ", "
             << num(m.mae) << ", " << num(m.mse) << "\n";
    sum.psnr += m.psnr;
    sum.ssim += m.ssim;
    sum.mae += m.mae;
    sum.mse += m.mse;
    ++sum.pairs;
  }
  if (sum.pairs > 0) {
    sum.psnr /= sum.pairs;
    sum.ssim /= sum.pairs;
    sum.mae /= sum.pairs;
    sum.mse /= sum.pairs;
  }
  return sum;
}

struct GridSpec {
  std::string param;  // "alpha" or "beta"
  std::vector<double> values;
};

GridSpec parse_grid(const std::string& s) {
  auto eq = s.find('=');
  if (eq == std::string::npos)
    throw InvalidArgument("grid must look like alpha=0.4:1.2:0.2");
  GridSpec g;
  g.param = s.substr(0, eq);
  if (g.param != "alpha" && g.param != "beta")
    throw InvalidArgument("grid parameter must be alpha or beta");
  double start, stop, step;
  if (std::sscanf(s.c_str() + eq + 1, "%lf:%lf:%lf", &start, &stop, &step) != 3 ||
      step <= 0 || stop < start)
    throw InvalidArgument("grid range must be start:stop:step with step > 0");
  int n = static_cast<int>(std::floor((stop - start) / step + 0.5)) + 1;
  for (int i = 0; i < n; ++i) g.values.push_back(start + i * step);
  return g;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"tiny iterative low-light image enhancer"};
  app.require_subcommand(1);

  // enhance
  auto* enhance = app.add_subcommand("enhance", "enhance one image");
  std::string e_weights, e_in, e_out;
  int e_iters = 8;
  bool e_no_irm = false;
  enhance->add_option("--weights", e_weights)->required();
  enhance->add_option("--in", e_in)->required();
  enhance->add_option("--out", e_out)->required();
  enhance->add_option("--iters", e_iters);
  enhance->add_flag("--no-irm", e_no_irm);

  // train
  auto* train_cmd = app.add_subcommand("train", "unsupervised training");
  std::string t_data, t_out, t_topology = "3-1-3", t_log;
  TrainConfig t_cfg;
  bool t_no_irm = false;
  train_cmd->add_option("--data", t_data)->required();
  train_cmd->add_option("--out", t_out)->required();
  train_cmd->add_option("--steps", t_cfg.steps);
  train_cmd->add_option("--topology", t_topology);
  train_cmd->add_option("--seed", t_cfg.seed);
  train_cmd->add_option("--alpha", t_cfg.loss.exp_alpha);
  train_cmd->add_option("--beta", t_cfg.loss.tv_beta);
  train_cmd->add_option("--batch", t_cfg.batch_size);
  train_cmd->add_option("--patch", t_cfg.patch);
  train_cmd->add_option("--lr", t_cfg.learning_rate);
  train_cmd->add_option("--iters", t_cfg.enhance.iterations);
  train_cmd->add_flag("--no-irm", t_no_irm);
  train_cmd->add_option("--log", t_log, "also write the loss log to this file");
  train_cmd->add_option("--ckpt-every", t_cfg.checkpoint_every);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "full-reference evaluation");
  std::string v_weights, v_low, v_gt, v_report;
  int v_iters = 8;
  bool v_no_irm = false;
  eval_cmd->add_option("--weights", v_weights)->required();
  eval_cmd->add_option("--low", v_low)->required();
  eval_cmd->add_option("--gt", v_gt)->required();
  eval_cmd->add_option("--report", v_report)->required();
  eval_cmd->add_option("--iters", v_iters);
  eval_cmd->add_flag("--no-irm", v_no_irm);

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "latency/FLOPs benchmark");
  std::string b_weights, b_res = "1920x1080";
  int b_runs = 50, b_warmup = 3, b_iters = 8;
  bool b_no_irm = false;
  bench_cmd->add_option("--weights", b_weights)->required();
  bench_cmd->add_option("--res", b_res, "resolution as WIDTHxHEIGHT");
  bench_cmd->add_option("--runs", b_runs);
  bench_cmd->add_option("--warmup", b_warmup);
  bench_cmd->add_option("--iters", b_iters);
  bench_cmd->add_flag("--no-irm", b_no_irm);

  // ablate
  auto* ablate_cmd = app.add_subcommand("ablate", "loss hyperparameter sweep");
  std::string a_data, a_gt, a_low, a_grid, a_report, a_topology = "3-1-3";
  TrainConfig a_cfg;
  a_cfg.steps = 500;
  ablate_cmd->add_option("--data", a_data)->required();
  ablate_cmd->add_option("--gt", a_gt)->required();
  ablate_cmd->add_option("--low", a_low,
                         "eval inputs; defaults to --data matches");
  ablate_cmd->add_option("--grid", a_grid)->required();
  ablate_cmd->add_option("--steps", a_cfg.steps);
  ablate_cmd->add_option("--seed", a_cfg.seed);
  ablate_cmd->add_option("--batch", a_cfg.batch_size);
  ablate_cmd->add_option("--patch", a_cfg.patch);
  ablate_cmd->add_option("--topology", a_topology);
  ablate_cmd->add_option("--report", a_report);

  // gradcheck
  auto* grad_cmd = app.add_subcommand("gradcheck", "analytic vs FD gradients");
  std::uint64_t g_seed = 0;
  int g_t = 2, g_cases = 20, g_patch = 16;
  double g_eps = 1e-5;
  bool g_no_irm = false;
  std::string g_topology = "3-1-3";
  grad_cmd->add_option("--seed", g_seed);
  grad_cmd->add_option("--t", g_t);
  grad_cmd->add_option("--cases", g_cases);
  grad_cmd->add_option("--patch", g_patch);
  grad_cmd->add_option("--eps", g_eps);
  grad_cmd->add_option("--topology", g_topology);
  grad_cmd->add_flag("--no-irm", g_no_irm);

  std::vector<const char*> argv;
  argv.push_back("liteie");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (app.got_subcommand(enhance)) {
      EnhanceConfig cfg;
      cfg.iterations = e_iters;
      cfg.irm_enabled = !e_no_irm;
      Weights w = deserialize_weights(e_weights);
      save_image(enhance_image(w, load_image(e_in), cfg), e_out);
      std::cout << "wrote " << e_out << " (T=" << cfg.iterations << ", irm="
                << (cfg.irm_enabled ? "on" : "off") << ")\n";
    } else if (app.got_subcommand(train_cmd)) {
      t_cfg.enhance.irm_enabled = !t_no_irm;
      if (t_cfg.checkpoint_every > 0) t_cfg.checkpoint_prefix = t_out;
      TrainResult res = train(t_data, parse_topology(t_topology), t_cfg,
                              &std::cout);
      serialize_weights(res.weights, t_out);
      if (!t_log.empty()) {
        std::ofstream f(t_log);
        if (!f) throw IoError("cannot write: " + t_log);
        for (const auto& line : res.log_lines) f << line << '\n';
      }
      std::cout << "saved weights to " << t_out << "\n";
    } else if (app.got_subcommand(eval_cmd)) {
      EnhanceConfig cfg;
      cfg.iterations = v_iters;
      cfg.irm_enabled = !v_no_irm;
      Weights w = deserialize_weights(v_weights);
      std::ofstream csv(v_report);
      if (!csv) throw IoError("cannot write: " + v_report);
      EvalSummary sum = run_eval(w, v_low, v_gt, cfg, &csv);
      std::cout << "pairs: " << sum.pairs << " mean psnr: " << num(sum.psnr)
                << " ssim: " << num(sum.ssim) << " mae: " << num(sum.mae)
                << " mse: " << num(sum.mse) << "\n";
    } else if (app.got_subcommand(bench_cmd)) {
      int rw = 0, rh = 0;
      if (std::sscanf(b_res.c_str(), "%dx%d", &rw, &rh) != 2 || rw < 1 || rh < 1)
        throw InvalidArgument("--res must be WIDTHxHEIGHT, e.g. 1920x1080");
      EnhanceConfig cfg;
      cfg.iterations = b_iters;
      cfg.irm_enabled = !b_no_irm;
      Weights w = deserialize_weights(b_weights);
      std::cout << "topology, HxW, T, flops, median_ms, p95_ms, fps, threads\n";
      auto row = [&](const BenchReport& r) {
        std::cout << topology_string(r.topology) << ", " << r.height << "x"
                  << r.width << ", " << r.iterations << ", " << r.flops << ", "
                  << num(r.median_ms) << ", " << num(r.p95_ms) << ", "
                  << num(r.fps) << ", " << r.threads << "\n";
      };
      row(time_pipeline(w, rh, rw, cfg, b_runs, b_warmup, 1));
      int max_threads = omp_get_max_threads();
      if (max_threads > 1)
        row(time_pipeline(w, rh, rw, cfg, b_runs, b_warmup, max_threads));
    } else if (app.got_subcommand(ablate_cmd)) {
      GridSpec grid = parse_grid(a_grid);
      if (a_low.empty()) a_low = a_data;
      NetTopology topo = parse_topology(a_topology);
      std::ostringstream csv;
      csv << "param, value, mean_psnr\n";
      double best_psnr = -1, best_value = 0;
      for (double v : grid.values) {
        TrainConfig cfg = a_cfg;
        if (grid.param == "alpha")
          cfg.loss.exp_alpha = v;
        else
          cfg.loss.tv_beta = v;
        TrainResult res = train(a_data, topo, cfg, nullptr);
        EvalSummary sum = run_eval(res.weights, a_low, a_gt, cfg.enhance, nullptr);
        std::string line = grid.param + ", " + num(v) + ", " + num(sum.psnr);
        std::cout << line << "\n" << std::flush;
        csv << line << "\n";
        if (sum.psnr > best_psnr) {
          best_psnr = sum.psnr;
          best_value = v;
        }
      }
      std::cout << "best " << grid.param << " = " << num(best_value)
                << " (mean psnr " << num(best_psnr) << ")\n";
      if (!a_report.empty()) {
        std::ofstream f(a_report);
        if (!f) throw IoError("cannot write: " + a_report);
        f << csv.str();
      }
    } else if (app.got_subcommand(grad_cmd)) {
      GradCheckSummary s =
          run_gradcheck(parse_topology(g_topology), g_cases, g_t, !g_no_irm,
                        g_seed, g_patch, g_eps);
      std::cout << fmt("max relative error: %.3e over %d cases (T=%d, irm=%s)\n",
                       s.max_rel_err, s.cases, g_t, g_no_irm ? "off" : "on");
      if (!(s.max_rel_err < 1e-4)) {
        std::cerr << "gradcheck failed: error >= 1e-4\n";
        return 2;
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace liteie
