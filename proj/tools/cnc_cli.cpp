// Copyright 2026 The cnc-field Authors
// SPDX-License-Identifier: Apache-2.0
//
// cnc: train, encode, decode, evaluate and sweep binarized hash-grid fields.
#include <CLI11.hpp>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "cnc/checkpoint.hpp"
#include "cnc/codec.hpp"
#include "cnc/config.hpp"
#include "cnc/corpus.hpp"
#include "cnc/field.hpp"

namespace fs = std::filesystem;
using namespace cnc;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfigFailure = 2, kDataFailure = 3, kNumericFailure = 4 };

struct RunOptions {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> lambda;
  bool paper_scale = false;
  std::optional<int> threads;
  std::optional<std::string> ablate;
  std::optional<int> ld;
  std::optional<int> lc;
};

void add_run_flags(CLI::App* app, RunOptions& o, bool need_config) {
  auto* c = app->add_option("--config", o.config, "INI config file");
  if (need_config) c->required();
  app->add_option("--seed", o.seed, "Seed for the field and the model");
  app->add_option("--lambda", o.lambda, "Rate-distortion tradeoff");
  app->add_flag("--paper-scale", o.paper_scale, "Start from the full-size settings");
  app->add_option("--threads", o.threads, "Worker threads");
  app->add_option("--ablate-context", o.ablate, "Disable context models: none, 2d, 3d, dim, all");
  app->add_option("--Ld", o.ld, "First 3D level coded with the frequency baseline (0: none)");
  app->add_option("--Lc", o.lc, "Number of context levels");
}

TrainConfig resolve_config(const RunOptions& o) {
  TrainConfig cfg = o.paper_scale ? TrainConfig::paper_scale() : TrainConfig{};
  if (!o.config.empty()) cfg = load_config(o.config, cfg);
  if (o.seed) cfg.seed = cfg.field_seed = *o.seed;
  if (o.lambda) cfg.lambda = *o.lambda;
  if (o.threads) cfg.threads = *o.threads;
  if (o.ablate) {
    try {
      cfg.context.ablation = parse_ablation(*o.ablate);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("--ablate-context: ") + e.what());
    }
  }
  if (o.ld) cfg.context.disable_from_level = *o.ld;
  if (o.lc) cfg.context.context_levels = *o.lc;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  write_file(path, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

bool has_magic(const std::vector<std::uint8_t>& bytes, const char* magic) {
  return bytes.size() >= 4 && std::memcmp(bytes.data(), magic, 4) == 0;
}

int cmd_train(const RunOptions& o) {
  const TrainConfig cfg = resolve_config(o);
  const std::string text = format_config(cfg);
  const TargetField field = synth_field(cfg.field, cfg.field_seed, cfg.channels);
  fs::create_directories(o.out);
  std::ofstream log(fs::path(o.out) / "train_log.csv");
  log << "iteration,lr,mse,estimated_bits,loss\n";
  log.precision(9);
  const TrainState st = train(cfg, field, [&](const TrainState&, const TrainLogRow& r) {
    log << r.iteration << ',' << r.lr << ',' << r.mse << ',' << r.estimated_bits << ',' << r.loss << '\n';
  });
  log.close();
  Checkpoint ckpt{text, cfg.geometry, st.model};
  write_file(fs::path(o.out) / "checkpoint.cnck", serialize_checkpoint(ckpt));
  write_text(fs::path(o.out) / "config.ini", text);
  std::cout << "trained " << cfg.iterations << " iterations in " << st.seconds << " s, psnr "
            << evaluate(st.model, field, cfg.threads) << " dB\n";
  return kOk;
}

int cmd_encode(const std::string& in, const std::string& out, int threads) {
  const Checkpoint ckpt = parse_checkpoint(read_file(in));
  const TrainConfig cfg = parse_config(ckpt.config_text);
  EncodeOptions opt;
  opt.mlp_bits = cfg.mlp_bits;
  opt.mlp_rounding = cfg.mlp_rounding;
  opt.lambda = cfg.lambda;
  opt.threads = threads;
  opt.geometry = ckpt.geometry;
  const EncodeResult r = encode_model(ckpt.model, opt);
  write_file(out, r.bytes);
  const ComponentSizes& s = r.sizes;
  std::cout << "wrote " << s.total << " bytes (header " << s.header << ", occupancy " << s.occupancy << ", context "
            << s.fusers << ", mlp " << s.mlp << ", emb3d " << s.emb3d << ", emb2d " << s.emb2d << ")\n";
  return kOk;
}

int cmd_decode(const std::string& in, const std::string& out, int threads) {
  const DecodedModel d = decode_model(read_file(in), threads);
  fs::create_directories(out);
  Checkpoint ckpt{"", d.geometry.options, d.model};
  write_file(fs::path(out) / "decoded.cnck", serialize_checkpoint(ckpt));
  std::cout << "decoded " << d.sizes.total << " bytes, lambda " << d.lambda << ", " << d.model.levels.size()
            << " levels\n";
  return kOk;
}

int cmd_eval(const std::string& model_path, const RunOptions& o) {
  const auto bytes = read_file(model_path);
  FieldModel model;
  std::string embedded;
  if (has_magic(bytes, "CNC1")) {
    model = decode_model(bytes, o.threads.value_or(1)).model;
  } else {
    Checkpoint ckpt = parse_checkpoint(bytes);
    embedded = ckpt.config_text;
    model = std::move(ckpt.model);
  }
  TrainConfig cfg;
  if (!o.config.empty()) {
    cfg = resolve_config(o);
  } else if (!embedded.empty()) {
    cfg = parse_config(embedded);
  } else {
    throw ConfigError("eval of a decoded model needs --config to name the field");
  }
  const TargetField field = synth_field(cfg.field, cfg.field_seed, cfg.channels);
  std::cout.precision(6);
  std::cout << "psnr_db " << std::fixed << evaluate(model, field, o.threads.value_or(cfg.threads)) << '\n';
  return kOk;
}

std::vector<double> parse_lambdas(const std::string& list) {
  std::vector<double> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("--lambdas: bad value '" + item + "'");
    }
  }
  return out;
}

int cmd_sweep(const RunOptions& o, const std::string& lambda_list) {
  const TrainConfig cfg = resolve_config(o);
  const auto lambdas = parse_lambdas(lambda_list);
  if (lambdas.size() < 2) throw ConfigError("--lambdas needs at least two values");
  const TargetField field = synth_field(cfg.field, cfg.field_seed, cfg.channels);
  fs::create_directories(o.out);
  std::vector<RdPoint> points;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    std::vector<std::uint8_t> bytes;
    RdPoint p = rd_point(cfg, field, lambdas[i], &bytes);
    if (!p.error) {
      const fs::path file = fs::path(o.out) / ("rd_" + std::to_string(i) + ".cnc");
      write_file(file, bytes);
      if (fs::file_size(file) != p.sizes.total) p.error = "coded size disagrees with file size";
    }
    std::cout << "lambda " << p.lambda << ": " << (p.error ? "failed: " + *p.error : std::to_string(p.sizes.total) +
                                                                                       " bytes, " +
                                                                                       std::to_string(p.psnr_db) + " dB")
              << '\n';
    points.push_back(std::move(p));
  }
  std::ofstream csv(fs::path(o.out) / "rd.csv");
  write_rd_csv(points, csv);
  std::ofstream json(fs::path(o.out) / "rd.json");
  write_rd_json(points, format_config(cfg), json);
  for (const auto& p : points)
    if (p.error) return kFailure;
  return kOk;
}

int cmd_gen_corpus(const std::string& kind, std::uint64_t seed, std::uint64_t bits, const std::string& out) {
  Corpus c;
  try {
    c = make_corpus(kind, seed, bits);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  write_file(out, write_corpus(c));
  std::cout << "wrote " << c.kind << " corpus with " << c.bit_count() << " bits\n";
  return kOk;
}

int cmd_code_corpus(const std::string& in, bool context, int iterations, std::uint64_t seed, int threads) {
  const Corpus c = read_corpus(read_file(in));
  const CorpusCoding freq = code_corpus_frequency(c);
  std::cout << "frequency: " << freq.payload.size() << " bytes, estimate " << freq.estimated_bits / 8 << " bytes\n";
  if (context) {
    FitOptions opt;
    opt.iterations = iterations;
    opt.seed = seed;
    opt.threads = threads;
    const FuserBank bank = fit_corpus_context(c, 3, opt);
    const CorpusCoding ctx = code_corpus_context(c, bank, 3, threads);
    std::cout << "context: " << ctx.payload.size() << " bytes, estimate " << ctx.estimated_bits / 8 << " bytes\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Binarized hash-grid field codec"};
  app.require_subcommand(1);

  RunOptions train_opt;
  auto* train_cmd = app.add_subcommand("train", "Train a field and write a checkpoint");
  add_run_flags(train_cmd, train_opt, true);
  train_cmd->add_option("--out", train_opt.out, "Output directory")->required();

  std::string enc_in, enc_out;
  int enc_threads = 1;
  auto* encode_cmd = app.add_subcommand("encode", "Encode a checkpoint into a bitstream");
  encode_cmd->add_option("--checkpoint", enc_in, "Checkpoint file")->required();
  encode_cmd->add_option("--out", enc_out, "Output .cnc file")->required();
  encode_cmd->add_option("--threads", enc_threads, "Worker threads");

  std::string dec_in, dec_out;
  int dec_threads = 1;
  auto* decode_cmd = app.add_subcommand("decode", "Decode a bitstream into a checkpoint");
  decode_cmd->add_option("--in", dec_in, "Input .cnc file")->required();
  decode_cmd->add_option("--out", dec_out, "Output directory")->required();
  decode_cmd->add_option("--threads", dec_threads, "Worker threads");

  RunOptions eval_opt;
  std::string eval_model;
  auto* eval_cmd = app.add_subcommand("eval", "PSNR of a checkpoint or bitstream");
  eval_cmd->add_option("--model", eval_model, "Checkpoint or .cnc file")->required();
  add_run_flags(eval_cmd, eval_opt, false);

  RunOptions sweep_opt;
  std::string lambdas = "0.0007,0.002,0.004,0.008";
  auto* sweep_cmd = app.add_subcommand("sweep", "Rate-distortion sweep over lambda");
  add_run_flags(sweep_cmd, sweep_opt, true);
  sweep_cmd->add_option("--out", sweep_opt.out, "Output directory")->required();
  sweep_cmd->add_option("--lambdas", lambdas, "Comma-separated lambda values");

  std::string corpus_kind, corpus_out;
  std::uint64_t corpus_seed = 1, corpus_bits = kDefaultCorpusBits;
  auto* gen_cmd = app.add_subcommand("gen-corpus", "Write a synthetic sign corpus");
  gen_cmd->add_option("--kind", corpus_kind, "iid(p), multiscale-correlated or all-ones")->required();
  gen_cmd->add_option("--seed", corpus_seed, "Seed");
  gen_cmd->add_option("--bits", corpus_bits, "Length of flat corpora");
  gen_cmd->add_option("--out", corpus_out, "Output file")->required();

  std::string code_in;
  bool code_context = false;
  int code_iters = 300, code_threads = 1;
  std::uint64_t code_seed = 1;
  auto* code_cmd = app.add_subcommand("code-corpus", "Report coded sizes of a corpus");
  code_cmd->add_option("--in", code_in, "Corpus file")->required();
  code_cmd->add_flag("--context", code_context, "Also fit and apply a context model");
  code_cmd->add_option("--iterations", code_iters, "Context fitting iterations");
  code_cmd->add_option("--seed", code_seed, "Context fitting seed");
  code_cmd->add_option("--threads", code_threads, "Worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigFailure;
  }

  try {
    if (*train_cmd) return cmd_train(train_opt);
    if (*encode_cmd) return cmd_encode(enc_in, enc_out, enc_threads);
    if (*decode_cmd) return cmd_decode(dec_in, dec_out, dec_threads);
    if (*eval_cmd) return cmd_eval(eval_model, eval_opt);
    if (*sweep_cmd) return cmd_sweep(sweep_opt, lambdas);
    if (*gen_cmd) return cmd_gen_corpus(corpus_kind, corpus_seed, corpus_bits, corpus_out);
    if (*code_cmd) return cmd_code_corpus(code_in, code_context, code_iters, code_seed, code_threads);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigFailure;
  } catch (const StreamError& e) {
    std::cerr << "stream error: " << e.what() << '\n';
    return kDataFailure;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kNumericFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataFailure;
  }
  return kFailure;
}
