// ivp command-line tool: synthetic data generation, training, evaluation,
// and side-by-side cell comparison on IVSQ frame sequences.

#include <algorithm>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ivp.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

int exit_code_for(ivp_status status) {
  return status == IVP_ERR_NUMERIC ? kExitNumeric : kExitUsage;
}

int fail_with(ivp_status status) {
  std::fprintf(stderr, "ivp: error (%s): %s\n", ivp_status_name(status), ivp_last_error());
  return exit_code_for(status);
}

struct SeqHandle {
  ivp_sequence* s = nullptr;
  ~SeqHandle() { ivp_sequence_free(s); }
};
struct ModelHandle {
  ivp_model* m = nullptr;
  ~ModelHandle() { ivp_model_free(m); }
};
struct ReportHandle {
  ivp_eval_report* r = nullptr;
  ~ReportHandle() { ivp_eval_report_free(r); }
};

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[4096];
  while (f.read(buf, sizeof(buf)) || f.gcount() > 0) {
    for (std::streamsize i = 0; i < f.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
    if (!f) break;
  }
  return h;
}

bool parse_size(const std::string& text, std::uint32_t& h, std::uint32_t& w) {
  const auto x = text.find('x');
  if (x == std::string::npos) return false;
  try {
    h = static_cast<std::uint32_t>(std::stoul(text.substr(0, x)));
    w = static_cast<std::uint32_t>(std::stoul(text.substr(x + 1)));
  } catch (...) {
    return false;
  }
  return h > 0 && w > 0;
}

int cell_type_from_name(const std::string& name) {
  if (name == "conv") return IVP_CELL_CONV;
  if (name == "iv1") return IVP_CELL_INCEPTION_V1;
  if (name == "iv2") return IVP_CELL_INCEPTION_V2;
  return -1;
}

struct TrainOptions {
  std::vector<std::string> data;
  std::string cell = "conv";
  std::uint32_t layers = 2;
  std::uint32_t steps = 0;
  std::uint64_t seed = 0;
  double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::uint32_t batch = 1;
  std::uint32_t seq_len = 10;
  std::string loss = "pixel_mse";
  std::vector<double> layer_weights;
  std::string precision = "f64";
  std::uint32_t kernel = 3;
  bool candidate_sigmoid = false;
  std::vector<std::uint32_t> input_channels;
  std::vector<std::uint32_t> hidden_channels;
};

void add_train_options(CLI::App* cmd, TrainOptions& o, bool with_cell) {
  cmd->add_option("--data", o.data, "IVSQ input file(s)")->required()->expected(-1);
  if (with_cell)
    cmd->add_option("--cell", o.cell, "recurrent cell: conv, iv1, iv2")
        ->check(CLI::IsMember({"conv", "iv1", "iv2"}))
        ->capture_default_str();
  cmd->add_option("--layers", o.layers, "stack depth")
      ->check(CLI::Range(2u, 4u))
      ->capture_default_str();
  cmd->add_option("--steps", o.steps, "training steps")->capture_default_str();
  cmd->add_option("--seed", o.seed, "model init and sampling seed")->capture_default_str();
  cmd->add_option("--lr", o.lr, "Adam learning rate")->capture_default_str();
  cmd->add_option("--beta1", o.beta1, "Adam beta1")->capture_default_str();
  cmd->add_option("--beta2", o.beta2, "Adam beta2")->capture_default_str();
  cmd->add_option("--eps", o.eps, "Adam epsilon")->capture_default_str();
  cmd->add_option("--batch", o.batch, "sequences per step")->capture_default_str();
  cmd->add_option("--seq-len", o.seq_len, "training window length T")->capture_default_str();
  cmd->add_option("--loss", o.loss, "loss mode: pixel_mse or layer_weighted")
      ->check(CLI::IsMember({"pixel_mse", "layer_weighted"}))
      ->capture_default_str();
  cmd->add_option("--layer-weights", o.layer_weights,
                  "per-layer weights for layer_weighted loss (default 1 0.1 0.1 0.1)")
      ->expected(-1);
  cmd->add_option("--precision", o.precision, "model precision: f32 or f64")
      ->check(CLI::IsMember({"f32", "f64"}))
      ->capture_default_str();
  cmd->add_option("--kernel", o.kernel, "conv-LSTM gate kernel size (odd)")
      ->capture_default_str();
  cmd->add_flag("--candidate-sigmoid", o.candidate_sigmoid,
                "use sigmoid instead of tanh on the candidate gate");
  cmd->add_option("--channels", o.input_channels,
                  "per-layer input channel override (default 3 48 96 192)")
      ->expected(-1);
  cmd->add_option("--hidden", o.hidden_channels,
                  "per-layer hidden channel override (default = input channels)")
      ->expected(-1);
}

int load_all(const std::vector<std::string>& paths, std::vector<SeqHandle>& out) {
  out.resize(paths.size());
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const ivp_status st = ivp_sequence_load(paths[i].c_str(), &out[i].s);
    if (st != IVP_OK) return fail_with(st);
  }
  return kExitOk;
}

int make_model(const TrainOptions& o, ModelHandle& model) {
  ivp_model_config cfg;
  ivp_model_config_init(&cfg);
  cfg.layers = o.layers;
  cfg.cell_type = cell_type_from_name(o.cell);
  cfg.seed = o.seed;
  cfg.precision = o.precision == "f32" ? IVP_PRECISION_F32 : IVP_PRECISION_F64;
  cfg.candidate_sigmoid = o.candidate_sigmoid ? 1 : 0;
  cfg.conv_kernel = o.kernel;
  if (!o.input_channels.empty()) {
    if (o.input_channels.size() != o.layers) {
      std::fprintf(stderr, "ivp: error: --channels needs %u values\n", o.layers);
      return kExitUsage;
    }
    cfg.input_channels = o.input_channels.data();
  }
  if (!o.hidden_channels.empty()) {
    if (o.hidden_channels.size() != o.layers) {
      std::fprintf(stderr, "ivp: error: --hidden needs %u values\n", o.layers);
      return kExitUsage;
    }
    cfg.hidden_channels = o.hidden_channels.data();
  }
  const ivp_status st = ivp_model_create(&cfg, &model.m);
  if (st != IVP_OK) return fail_with(st);
  return kExitOk;
}

ivp_train_config train_config_from(const TrainOptions& o) {
  ivp_train_config cfg;
  ivp_train_config_init(&cfg);
  cfg.learning_rate = o.lr;
  cfg.adam_beta1 = o.beta1;
  cfg.adam_beta2 = o.beta2;
  cfg.adam_eps = o.eps;
  cfg.steps = o.steps;
  cfg.batch = o.batch;
  cfg.seq_len = o.seq_len;
  cfg.seed = o.seed;
  cfg.loss_mode = o.loss == "layer_weighted" ? IVP_LOSS_LAYER_WEIGHTED : IVP_LOSS_PIXEL_MSE;
  if (!o.layer_weights.empty()) {
    cfg.layer_loss_weights = o.layer_weights.data();
    cfg.layer_loss_weight_count = o.layer_weights.size();
  }
  return cfg;
}

void print_param_report(ivp_model* model) {
  const std::uint32_t layers = ivp_model_layers(model);
  for (std::uint32_t l = 0; l < layers; ++l) {
    ivp_param_report rep;
    if (ivp_model_param_report(model, l, &rep) != IVP_OK) continue;
    std::printf("layer %u cell: params=%" PRIu64 " (kernel=%" PRIu64 " bias=%" PRIu64
                ") gate_kernel_coeff=%u\n",
                l, rep.cell_total, rep.cell_kernel_elems, rep.cell_biases, rep.gate_kernel_coeff);
  }
  ivp_param_report rep;
  if (ivp_model_param_report(model, 0, &rep) == IVP_OK)
    std::printf("network params total=%" PRIu64 "\n", rep.network_total);
}

// Flat key = value config files ('#' starts a comment). Values for a key the
// command line already names are ignored; unknown keys are an error.
struct ConfigResult {
  std::vector<std::string> tokens;
  std::string error;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

ConfigResult read_config_file(const std::string& path, const CLI::App* cmd,
                              const std::vector<std::string>& explicit_args) {
  ConfigResult res;
  std::ifstream f(path);
  if (!f) {
    res.error = "cannot open config file '" + path + "'";
    return res;
  }

  auto given_explicitly = [&](const std::string& flag) {
    for (const auto& a : explicit_args)
      if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    return false;
  };

  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      res.error = "config line " + std::to_string(lineno) + " is not 'key = value'";
      return res;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string flag = "--" + key;

    const CLI::Option* opt = cmd->get_option_no_throw(flag);
    if (!opt || key == "config") {
      res.error = "unknown key '" + key + "' on config line " + std::to_string(lineno);
      return res;
    }
    if (given_explicitly(flag)) continue;

    if (opt->get_expected_max() == 0) {  // flag
      if (value == "true" || value == "1" || value == "yes") res.tokens.push_back(flag);
      continue;
    }
    res.tokens.push_back(flag);
    if (opt->get_expected_max() > 1) {
      std::istringstream vs(value);
      std::string tok;
      while (vs >> tok) res.tokens.push_back(tok);
    } else {
      res.tokens.push_back(value);
    }
  }
  return res;
}

struct LossCsv {
  std::ofstream file;
  bool ok = true;
};

void loss_to_csv(std::uint64_t step, double loss, void* user) {
  auto* csv = static_cast<LossCsv*>(user);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%" PRIu64 ",%.17g\n", step, loss);
  csv->file << buf;
}

int run_generate(const std::string& out, std::uint64_t seed, std::uint32_t frames,
                 const std::string& size, std::uint32_t shapes, std::uint32_t channels,
                 const std::string& dtype) {
  ivp_scene_spec spec;
  ivp_scene_spec_init(&spec);
  if (!parse_size(size, spec.height, spec.width)) {
    std::fprintf(stderr, "ivp: error: --size expects HxW, got '%s'\n", size.c_str());
    return kExitUsage;
  }
  spec.seed = seed;
  spec.frame_count = frames;
  spec.auto_shapes = shapes;
  spec.channels = channels;

  SeqHandle seq;
  ivp_status st = ivp_sequence_generate(&spec, &seq.s);
  if (st != IVP_OK) return fail_with(st);
  st = ivp_sequence_save(seq.s, out.c_str(), dtype == "f64" ? IVP_DTYPE_F64 : IVP_DTYPE_F32);
  if (st != IVP_OK) return fail_with(st);

  std::printf("frames=%u checksum=%016" PRIx64 "\n", ivp_sequence_frame_count(seq.s),
              fnv1a64_file(out));
  return kExitOk;
}

int run_train(const TrainOptions& o, const std::string& out, const std::string& loss_csv_path) {
  std::vector<SeqHandle> seqs;
  if (int rc = load_all(o.data, seqs); rc != kExitOk) return rc;
  std::vector<const ivp_sequence*> data;
  for (auto& s : seqs) data.push_back(s.s);

  ModelHandle model;
  if (int rc = make_model(o, model); rc != kExitOk) return rc;

  LossCsv csv;
  const std::string csv_path = loss_csv_path.empty() ? out + ".loss.csv" : loss_csv_path;
  csv.file.open(csv_path);
  if (!csv.file) {
    std::fprintf(stderr, "ivp: error: cannot open '%s' for writing\n", csv_path.c_str());
    return kExitUsage;
  }
  csv.file << "step,loss\n";

  double final_loss = 0.0;
  bool any_step = false;
  struct Ctx {
    LossCsv* csv;
    double* final_loss;
    bool* any;
  } ctx{&csv, &final_loss, &any_step};
  auto cb = [](std::uint64_t step, double loss, void* user) {
    auto* c = static_cast<Ctx*>(user);
    loss_to_csv(step, loss, c->csv);
    *c->final_loss = loss;
    *c->any = true;
  };

  const ivp_train_config cfg = train_config_from(o);
  const ivp_status st = ivp_model_train(model.m, data.data(), data.size(), &cfg, cb, &ctx);
  if (st != IVP_OK) return fail_with(st);

  const ivp_status save_st = ivp_model_save(model.m, out.c_str());
  if (save_st != IVP_OK) return fail_with(save_st);

  if (any_step)
    std::printf("trained %u steps, final loss %.17g\n", o.steps, final_loss);
  else
    std::printf("trained 0 steps (checkpoint of the initialized model)\n");
  print_param_report(model.m);
  std::printf("checkpoint written to %s\n", out.c_str());
  std::printf("loss trace written to %s\n", csv_path.c_str());
  return kExitOk;
}

int run_eval(const std::string& ckpt, const std::vector<std::string>& data_paths,
             std::uint32_t seq_len, const std::string& report_path,
             const std::string& dump_dir) {
  ModelHandle model;
  ivp_status st = ivp_model_load(ckpt.c_str(), &model.m);
  if (st != IVP_OK) return fail_with(st);
  const char* model_name = ivp_model_cell_name(model.m);

  bool first = true;
  for (const auto& path : data_paths) {
    SeqHandle seq;
    st = ivp_sequence_load(path.c_str(), &seq.s);
    if (st != IVP_OK) return fail_with(st);
    const ivp_sequence* data[1] = {seq.s};

    ReportHandle model_rep, base_rep;
    st = ivp_model_evaluate(model.m, data, 1, seq_len, &model_rep.r);
    if (st != IVP_OK) return fail_with(st);
    st = ivp_baseline_evaluate(data, 1, seq_len, &base_rep.r);
    if (st != IVP_OK) return fail_with(st);

    st = ivp_eval_report_append_csv(model_rep.r, report_path.c_str(), model_name, path.c_str(),
                                    first ? 1 : 0);
    if (st != IVP_OK) return fail_with(st);
    st = ivp_eval_report_append_csv(base_rep.r, report_path.c_str(), "baseline", path.c_str(), 0);
    if (st != IVP_OK) return fail_with(st);
    first = false;

    double model_mse = 0, base_mse = 0;
    ivp_eval_report_aggregate(model_rep.r, IVP_METRIC_MSE, &model_mse);
    ivp_eval_report_aggregate(base_rep.r, IVP_METRIC_MSE, &base_mse);
    std::printf("%s: model mse %.6g, copy-last baseline mse %.6g\n", path.c_str(), model_mse,
                base_mse);
  }

  if (!dump_dir.empty()) {
    fs::create_directories(dump_dir);
    for (std::size_t si = 0; si < data_paths.size(); ++si) {
      SeqHandle seq;
      st = ivp_sequence_load(data_paths[si].c_str(), &seq.s);
      if (st != IVP_OK) return fail_with(st);
      SeqHandle preds;
      st = ivp_model_predict(model.m, seq.s, 0, &preds.s);
      if (st != IVP_OK) return fail_with(st);
      const std::uint32_t count = ivp_sequence_frame_count(preds.s);
      for (std::uint32_t t = 1; t <= count; ++t) {
        const auto pred = dump_dir + "/seq" + std::to_string(si) + "_t" + std::to_string(t) + "_pred.ppm";
        const auto truth = dump_dir + "/seq" + std::to_string(si) + "_t" + std::to_string(t) + "_true.ppm";
        if ((st = ivp_sequence_write_ppm(preds.s, t - 1, pred.c_str())) != IVP_OK)
          return fail_with(st);
        if ((st = ivp_sequence_write_ppm(seq.s, t, truth.c_str())) != IVP_OK)
          return fail_with(st);
      }
    }
    std::printf("frame dumps written to %s\n", dump_dir.c_str());
  }
  std::printf("report written to %s\n", report_path.c_str());
  return kExitOk;
}

int run_compare(const TrainOptions& base_opts, const std::string& out_dir) {
  std::vector<SeqHandle> seqs;
  if (int rc = load_all(base_opts.data, seqs); rc != kExitOk) return rc;
  std::vector<const ivp_sequence*> data;
  for (auto& s : seqs) data.push_back(s.s);

  fs::create_directories(out_dir);
  std::ofstream compare_csv(out_dir + "/compare.csv");
  std::ofstream params_csv(out_dir + "/params.csv");
  if (!compare_csv || !params_csv) {
    std::fprintf(stderr, "ivp: error: cannot write into '%s'\n", out_dir.c_str());
    return kExitUsage;
  }
  compare_csv << "model,layers,mae,mse,ssim\n";
  params_csv << "model,layers,param_total,gate_coeff\n";

  bool any_failed = false;
  for (const char* cell : {"conv", "iv1", "iv2"}) {
    TrainOptions o = base_opts;
    o.cell = cell;

    ModelHandle model;
    if (int rc = make_model(o, model); rc != kExitOk) return rc;

    const ivp_train_config cfg = train_config_from(o);
    ivp_status st = ivp_model_train(model.m, data.data(), data.size(), &cfg, nullptr, nullptr);
    if (st != IVP_OK) {
      std::fprintf(stderr, "ivp: %s failed (%s): %s\n", cell, ivp_status_name(st),
                   ivp_last_error());
      any_failed = true;
      continue;
    }

    const std::string ckpt = out_dir + "/" + cell + ".ivck";
    if ((st = ivp_model_save(model.m, ckpt.c_str())) != IVP_OK) return fail_with(st);

    ReportHandle rep;
    st = ivp_model_evaluate(model.m, data.data(), data.size(), o.seq_len, &rep.r);
    if (st != IVP_OK) {
      std::fprintf(stderr, "ivp: %s evaluation failed: %s\n", cell, ivp_last_error());
      any_failed = true;
      continue;
    }
    double vals[3] = {0, 0, 0};
    ivp_eval_report_aggregate(rep.r, IVP_METRIC_MAE, &vals[0]);
    ivp_eval_report_aggregate(rep.r, IVP_METRIC_MSE, &vals[1]);
    ivp_eval_report_aggregate(rep.r, IVP_METRIC_SSIM, &vals[2]);
    char row[256];
    std::snprintf(row, sizeof(row), "%s,%u,%.17g,%.17g,%.17g\n", cell, o.layers, vals[0], vals[1],
                  vals[2]);
    compare_csv << row;

    ivp_param_report prep;
    if (ivp_model_param_report(model.m, 0, &prep) == IVP_OK) {
      params_csv << cell << "," << o.layers << "," << prep.network_total << ","
                 << prep.gate_kernel_coeff << "\n";
    }
    std::printf("%s: mae=%.6g mse=%.6g ssim=%.6g\n", cell, vals[0], vals[1], vals[2]);
  }

  std::printf("comparison written to %s/compare.csv and %s/params.csv\n", out_dir.c_str(),
              out_dir.c_str());
  return any_failed ? kExitNumeric : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"next-frame video prediction with convolutional and inception LSTMs"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "write a synthetic bouncing-shapes IVSQ file");
  std::string gen_out, gen_size = "16x16", gen_dtype = "f32";
  std::uint64_t gen_seed = 0;
  std::uint32_t gen_frames = 20, gen_shapes = 1, gen_channels = 3;
  gen->add_option("--out", gen_out, "output IVSQ path")->required();
  gen->add_option("--seed", gen_seed, "scene seed")->capture_default_str();
  gen->add_option("--frames", gen_frames, "frame count")->capture_default_str();
  gen->add_option("--size", gen_size, "canvas HxW")->capture_default_str();
  gen->add_option("--shapes", gen_shapes, "number of bouncing shapes")->capture_default_str();
  gen->add_option("--channels", gen_channels, "1 (gray) or 3 (RGB)")->capture_default_str();
  gen->add_option("--dtype", gen_dtype, "payload dtype: f32 or f64")
      ->check(CLI::IsMember({"f32", "f64"}))
      ->capture_default_str();
  std::string gen_config;
  gen->add_option("--config", gen_config, "read options from a flat key=value file");

  // train
  auto* tr = app.add_subcommand("train", "train one model and write an IVCK checkpoint");
  TrainOptions topt;
  std::string train_out, train_loss_csv;
  add_train_options(tr, topt, true);
  tr->add_option("--out", train_out, "output IVCK checkpoint path")->required();
  tr->add_option("--loss-csv", train_loss_csv, "loss trace CSV (default: <out>.loss.csv)");
  std::string train_config;
  tr->add_option("--config", train_config, "read options from a flat key=value file");

  // eval
  auto* ev = app.add_subcommand("eval", "score a checkpoint against IVSQ data");
  std::string eval_ckpt, eval_report, eval_dump;
  std::vector<std::string> eval_data;
  std::uint32_t eval_seq_len = 10;
  ev->add_option("--ckpt", eval_ckpt, "IVCK checkpoint")->required();
  ev->add_option("--data", eval_data, "IVSQ input file(s)")->required()->expected(-1);
  ev->add_option("--seq-len", eval_seq_len, "evaluation window length T")->capture_default_str();
  ev->add_option("--report", eval_report, "output CSV path")->required();
  ev->add_option("--dump-frames", eval_dump, "directory for predicted/true PPM frames");
  std::string eval_config;
  ev->add_option("--config", eval_config, "read options from a flat key=value file");

  // compare
  auto* cmp = app.add_subcommand("compare", "train conv, iv1, iv2 with one budget and tabulate");
  TrainOptions copt;
  std::string compare_out;
  add_train_options(cmp, copt, false);
  cmp->add_option("--out", compare_out, "output directory")->required();
  std::string cmp_config;
  cmp->add_option("--config", cmp_config, "read options from a flat key=value file");

  std::vector<std::string> args(argv + 1, argv + argc);

  // resolve --config before the real parse so the file can fill in any
  // option the command line leaves out
  if (args.size() >= 2 && !args[0].empty() && args[0][0] != '-') {
    std::string config_path;
    for (std::size_t i = 1; i + 1 < args.size(); ++i)
      if (args[i] == "--config") config_path = args[i + 1];
    for (const auto& a : args)
      if (a.rfind("--config=", 0) == 0) config_path = a.substr(9);
    if (!config_path.empty()) {
      const CLI::App* cmd = nullptr;
      for (const auto* sub : {gen, tr, ev, cmp})
        if (sub->get_name() == args[0]) cmd = sub;
      if (!cmd) {
        std::fprintf(stderr, "ivp: error: unknown subcommand '%s'\n", args[0].c_str());
        return kExitUsage;
      }
      const auto cfg = read_config_file(config_path, cmd, args);
      if (!cfg.error.empty()) {
        std::fprintf(stderr, "ivp: error: %s\n", cfg.error.c_str());
        return kExitUsage;
      }
      args.insert(args.end(), cfg.tokens.begin(), cfg.tokens.end());
    }
  }

  try {
    std::reverse(args.begin(), args.end());  // CLI11 consumes tokens back to front
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed())
      return run_generate(gen_out, gen_seed, gen_frames, gen_size, gen_shapes, gen_channels,
                          gen_dtype);
    if (tr->parsed()) return run_train(topt, train_out, train_loss_csv);
    if (ev->parsed()) return run_eval(eval_ckpt, eval_data, eval_seq_len, eval_report, eval_dump);
    if (cmp->parsed()) return run_compare(copt, compare_out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "ivp: error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
