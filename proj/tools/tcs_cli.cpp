// Command-line front end: mask generation, dataset building, training,
// encoding, reconstruction and evaluation.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tcs/binary.hpp"
#include "tcs/dataset.hpp"
#include "tcs/encoder.hpp"
#include "tcs/io.hpp"
#include "tcs/linear.hpp"
#include "tcs/mask.hpp"
#include "tcs/metrics.hpp"
#include "tcs/mlp.hpp"
#include "tcs/pipeline.hpp"
#include "tcs/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json solvability_json(const tcs::BuildingBlock& block) {
  const auto report = tcs::solvability_report(block);
  json empty = json::array();
  for (auto [x, y] : report.empty_pixels) empty.push_back({x, y});
  return {{"solvable", report.solvable()}, {"counts", report.counts}, {"empty_pixels", empty}};
}

json mask_json(const tcs::MeasurementMask& mask) {
  const auto& b = mask.block();
  return {{"type", "mask"},
          {"block", {b.width(), b.height(), b.frames()}},
          {"density", {b.density().numerator, b.density().denominator}},
          {"seed", b.seed()},
          {"nonzeros", b.nonzeros()},
          {"hash", tcs::hex64(mask.hash())},
          {"solvability", solvability_json(b)}};
}

tcs::Geometry patch_geometry(const tcs::MeasurementMask& mask, int patch_factor) {
  const auto& b = mask.block();
  tcs::Geometry g = tcs::Geometry::from_block(0, 0, b.width(), b.height(), b.frames(), patch_factor);
  g.validate_patch();
  return g;
}

std::unique_ptr<tcs::PatchDecoder> load_decoder(const std::string& path) {
  const std::string magic = tcs::peek_magic(path);
  if (magic == "SCSL") return std::make_unique<tcs::LinearModel>(tcs::LinearModel::load(path));
  if (magic == "SCSN") return std::make_unique<tcs::MlpModel>(tcs::MlpModel::load(path));
  throw tcs::FormatError(path + " is not a model file");
}

tcs::VideoFormat parse_format(const std::string& name) {
  if (name == "pgm") return tcs::VideoFormat::PgmSequence;
  if (name == "raw") return tcs::VideoFormat::RawJson;
  throw tcs::InvalidArgument("unknown video format '" + name + "' (pgm or raw)");
}

json dataset_header_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw tcs::IoError("cannot open " + path);
  tcs::BinaryReader r(in);
  r.expect_magic("SCSD");
  json j{{"type", "dataset"}, {"version", r.get<std::uint16_t>()}};
  j["N_p"] = r.get<std::uint32_t>();
  j["M_p"] = r.get<std::uint32_t>();
  j["N"] = r.get<std::uint64_t>();
  j["mask_hash"] = tcs::hex64(r.get<std::uint64_t>());
  const auto kind = r.get<std::uint8_t>();
  const double lo = r.get<double>();
  const double hi = r.get<double>();
  const auto seed = r.get<std::uint64_t>();
  j["noise"] = kind == 0 ? json{{"kind", "none"}}
                         : json{{"kind", "gaussian-snr"}, {"snr_db", {lo, hi}}, {"seed", seed}};
  j["patch"] = {r.get<std::uint32_t>(), r.get<std::uint32_t>(), r.get<std::uint32_t>()};
  const auto entries = r.get<std::uint32_t>();
  json manifest = json::array();
  for (std::uint32_t i = 0; i < entries; ++i) {
    json e{{"id", r.get_string()}};
    e["frames"] = r.get<std::uint64_t>();
    e["samples"] = r.get<std::uint64_t>();
    e["with_replacement"] = r.get<std::uint8_t>() != 0;
    manifest.push_back(e);
  }
  j["manifest"] = manifest;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal compressive video toolkit"};
  app.require_subcommand(1);

  // make-mask
  auto* make_mask = app.add_subcommand("make-mask", "Generate a tiled binary building block");
  std::string bs = "4x4x16";
  double density = 0.5;
  std::uint64_t mask_seed = 1;
  bool bernoulli = false;
  std::string mask_out;
  make_mask->add_option("--bs", bs, "Building block WxHxT")->capture_default_str();
  make_mask->add_option("--density", density, "Fraction of open entries")->capture_default_str();
  make_mask->add_option("--seed", mask_seed, "RNG seed")->capture_default_str();
  make_mask->add_flag("--bernoulli", bernoulli, "Independent entries instead of an exact count");
  make_mask->add_option("-o,--output", mask_out, "Mask file")->required();

  // build-dataset
  auto* build = app.add_subcommand("build-dataset", "Sample training blocks from videos");
  std::string mask_path;
  std::vector<std::string> videos;
  std::uint64_t count = 100000;
  std::uint64_t data_seed = 1;
  int patch_factor = 2;
  std::vector<double> snr_range;
  std::uint64_t noise_seed = 1;
  bool gray = false;
  std::string dataset_out;
  build->add_option("--mask", mask_path, "Mask file")->required();
  build->add_option("--video", videos, "PGM directory or raw .json sidecar (repeatable)")->required();
  build->add_option("--count", count, "Number of blocks")->capture_default_str();
  build->add_option("--seed", data_seed, "Sampling seed")->capture_default_str();
  build->add_option("--patch-factor", patch_factor, "Patch size in building blocks")->capture_default_str();
  build->add_option("--snr", snr_range, "Noisy training: SNR range LO HI in dB")->expected(2);
  build->add_option("--noise-seed", noise_seed, "Noise seed")->capture_default_str();
  build->add_flag("--gray", gray, "Convert color PPM frames with BT.601 weights");
  build->add_option("-o,--output", dataset_out, "Dataset file")->required();

  // train-linear
  auto* train_lin = app.add_subcommand("train-linear", "Fit the closed-form linear decoder");
  std::string dataset_path;
  double ridge = 0.0;
  bool pinv = false;
  std::string model_out;
  train_lin->add_option("--dataset", dataset_path, "Dataset file")->required();
  train_lin->add_option("--mask", mask_path, "Mask file")->required();
  train_lin->add_option("--ridge", ridge, "Ridge regularization")->capture_default_str();
  train_lin->add_flag("--pinv", pinv, "Use a pseudo-inverse when the system is singular");
  train_lin->add_option("-o,--output", model_out, "Model file")->required();

  // train-mlp
  auto* train_net = app.add_subcommand("train-mlp", "Train the fully-connected decoder");
  tcs::TrainConfig tc;
  tc.iterations = 20000;
  std::uint64_t drop_at = 0;
  std::string log_path;
  train_net->add_option("--dataset", dataset_path, "Dataset file")->required();
  train_net->add_option("--mask", mask_path, "Mask file")->required();
  train_net->add_option("--layers", tc.hidden_layers, "Hidden layers K")->capture_default_str();
  train_net->add_option("--iterations", tc.iterations, "SGD iterations")->capture_default_str();
  train_net->add_option("--batch", tc.batch_size, "Mini-batch size")->capture_default_str();
  train_net->add_option("--lr", tc.sgd.learning_rate, "Initial learning rate")->capture_default_str();
  train_net->add_option("--drop-at", drop_at, "Iteration after which lr is divided (default 75% of budget)");
  train_net->add_option("--drop-factor", tc.sgd.drop_factor, "Learning rate divisor")->capture_default_str();
  train_net->add_option("--momentum", tc.sgd.momentum, "Momentum")->capture_default_str();
  train_net->add_option("--clip", tc.sgd.clip_norm, "Global gradient-norm clip")->capture_default_str();
  train_net->add_option("--weight-decay", tc.sgd.weight_decay, "l2 weight penalty")->capture_default_str();
  train_net->add_option("--val-fraction", tc.validation_fraction, "Held-out fraction")->capture_default_str();
  train_net->add_option("--eval-every", tc.eval_interval, "Evaluation interval")->capture_default_str();
  train_net->add_option("--seed", tc.seed, "Seed")->capture_default_str();
  train_net->add_option("--log", log_path, "Training log CSV");
  train_net->add_option("-o,--output", model_out, "Model file")->required();

  // encode
  auto* enc = app.add_subcommand("encode", "Simulate coded-exposure capture of a video");
  std::string video_path;
  std::vector<double> enc_snr;
  std::string coded_out;
  enc->add_option("--mask", mask_path, "Mask file")->required();
  enc->add_option("--video", video_path, "PGM directory or raw .json sidecar")->required();
  enc->add_option("--snr", enc_snr, "Measurement noise SNR in dB (one value or LO HI)")->expected(1, 2);
  enc->add_option("--noise-seed", noise_seed, "Noise seed")->capture_default_str();
  enc->add_flag("--gray", gray, "Convert color PPM frames with BT.601 weights");
  enc->add_option("-o,--output", coded_out, "Output stem; writes <stem>_NNN.raw/.json")->required();

  // reconstruct
  auto* rec = app.add_subcommand("reconstruct", "Reconstruct video from coded frames");
  std::string model_path;
  std::vector<std::string> coded_paths;
  std::string format = "pgm";
  std::string rec_out;
  rec->add_option("--model", model_path, "Linear (.scsl) or network (.scsn) model")->required();
  rec->add_option("--mask", mask_path, "Mask file")->required();
  rec->add_option("--coded", coded_paths, "Coded frame sidecar(s), in temporal order")->required();
  rec->add_option("--patch-factor", patch_factor, "Patch size in building blocks")->capture_default_str();
  rec->add_option("--format", format, "pgm or raw")->capture_default_str();
  rec->add_option("-o,--output", rec_out, "Output directory (pgm) or stem (raw)")->required();

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "PSNR/SSIM between two videos");
  std::string ref_path, test_path, csv_out, json_out;
  eval->add_option("--ref", ref_path, "Reference video")->required();
  eval->add_option("--test", test_path, "Reconstructed video")->required();
  eval->add_option("--csv", csv_out, "Per-frame CSV report");
  eval->add_option("--json", json_out, "JSON report");

  // report
  auto* report = app.add_subcommand("report", "Describe a mask, dataset or model file");
  std::string artifact;
  report->add_option("file", artifact, "Artifact file")->required();

  // synth-video
  auto* synth = app.add_subcommand("synth-video", "Render procedural test footage");
  tcs::SyntheticVideoSpec spec;
  std::string size = "64x64";
  std::string synth_out;
  synth->add_option("--size", size, "WxH")->capture_default_str();
  synth->add_option("--frames", spec.frames, "Frame count")->capture_default_str();
  synth->add_option("--objects", spec.objects, "Number of moving shapes")->capture_default_str();
  synth->add_option("--speed", spec.max_speed, "Max shape speed, px/frame")->capture_default_str();
  synth->add_option("--seed", spec.seed, "Seed")->capture_default_str();
  synth->add_option("--format", format, "pgm or raw")->capture_default_str();
  synth->add_option("-o,--output", synth_out, "Output directory (pgm) or stem (raw)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*make_mask) {
      const auto d = tcs::parse_dims(bs);
      const auto block = tcs::generate_building_block(
          d.x, d.y, d.z, tcs::Density::from_double(density), mask_seed,
          bernoulli ? tcs::DensityMode::Bernoulli : tcs::DensityMode::ExactCount);
      const tcs::MeasurementMask mask(block);
      mask.save(mask_out);
      std::cout << mask_json(mask).dump(2) << '\n';
    } else if (*build) {
      const auto mask = tcs::MeasurementMask::load(mask_path);
      const auto g = patch_geometry(mask, patch_factor);
      std::vector<tcs::VideoSource> sources;
      for (const auto& v : videos) {
        auto ingested = tcs::ingest_video(v, g.block_width, g.block_height, 1, gray);
        sources.push_back({fs::path(v).filename().string(), std::move(ingested.volume)});
      }
      const auto noise = snr_range.empty()
                             ? tcs::NoiseSpec::none()
                             : tcs::NoiseSpec::gaussian(snr_range[0], snr_range[1], noise_seed);
      const auto set = tcs::build_training_set(sources, mask, g, count, data_seed, noise);
      set.save(dataset_out);
      std::cout << dataset_header_json(dataset_out).dump(2) << '\n';
    } else if (*train_lin) {
      const auto mask = tcs::MeasurementMask::load(mask_path);
      const auto set = tcs::TrainingSet::load(dataset_path, mask);
      tcs::SolveOptions opts;
      opts.ridge = ridge;
      opts.pseudo_inverse = pinv;
      const auto model = tcs::train_linear(set, opts);
      if (model.ill_conditioned())
        std::cerr << "warning: condition number " << model.condition_number()
                  << " exceeds 1e12; consider --ridge\n";
      model.save(model_out);
      std::cout << json{{"samples", model.samples()},
                        {"condition_number", model.condition_number()},
                        {"output", model_out}}
                       .dump(2)
                << '\n';
    } else if (*train_net) {
      const auto mask = tcs::MeasurementMask::load(mask_path);
      const auto set = tcs::TrainingSet::load(dataset_path, mask);
      tc.sgd.drop_iteration = drop_at > 0 ? drop_at : tc.iterations * 3 / 4;
      tc.on_eval = [](const tcs::TrainLogRow& r) {
        std::cerr << "iter " << r.iteration << " lr " << r.learning_rate << " train_mse "
                  << r.train_mse << " val_mse " << r.val_mse << '\n';
      };
      const auto result = tcs::train_mlp(set, tc);
      result.model.save(model_out);
      if (!log_path.empty()) {
        std::ofstream log(log_path);
        tcs::write_train_log_csv(result.log, log);
      }
      std::cout << json{{"best_iteration", result.best_iteration},
                        {"best_val_mse", result.best_val_mse},
                        {"iterations", result.iterations_run},
                        {"output", model_out}}
                       .dump(2)
                << '\n';
    } else if (*enc) {
      const auto mask = tcs::MeasurementMask::load(mask_path);
      const auto& b = mask.block();
      const auto video = tcs::ingest_video(video_path, b.width(), b.height(), b.frames(), gray);
      tcs::NoiseSpec noise;
      if (!enc_snr.empty())
        noise = tcs::NoiseSpec::gaussian(enc_snr.front(), enc_snr.back(), noise_seed);
      tcs::Rng rng(noise_seed);
      json written = json::array();
      for (int first = 0, i = 0; first < video.volume.frames(); first += b.frames(), ++i) {
        auto coded = tcs::encode(video.volume.slice(first, b.frames()), mask);
        if (noise.enabled()) coded = tcs::add_noise(coded, noise, rng).frame;
        char suffix[16];
        std::snprintf(suffix, sizeof suffix, "_%03d", i);
        const std::string stem = coded_out + suffix;
        tcs::write_coded_frame(stem, coded, video.original_width, video.original_height);
        written.push_back(stem + ".json");
      }
      std::cout << json{{"coded_frames", written}, {"dropped_frames", video.dropped_frames}}.dump(2)
                << '\n';
    } else if (*rec) {
      const auto mask = tcs::MeasurementMask::load(mask_path);
      const auto decoder = load_decoder(model_path);
      std::vector<tcs::VideoVolume> parts;
      int crop_w = 0, crop_h = 0;
      for (const auto& p : coded_paths) {
        const auto file = tcs::read_coded_frame(p);
        if (file.coded.mask_hash != mask.hash())
          throw tcs::HashMismatchError(p + " was captured with a different mask");
        const auto& m = file.coded.measurements;
        auto g = patch_geometry(mask, patch_factor).with_frame(m.width(), m.height());
        parts.push_back(tcs::reconstruct(file.coded, *decoder, g));
        crop_w = file.crop_width;
        crop_h = file.crop_height;
      }
      tcs::export_video(tcs::concatenate(parts), rec_out, parse_format(format), crop_w, crop_h);
      std::cout << json{{"frames", int(parts.size()) * mask.temporal_len()}, {"output", rec_out}}.dump(2)
                << '\n';
    } else if (*eval) {
      const auto ref = tcs::to_volume(tcs::read_video8(ref_path));
      const auto test = tcs::to_volume(tcs::read_video8(test_path));
      const auto metrics = tcs::evaluate_sequence(ref, test);
      if (!csv_out.empty()) {
        std::ofstream out(csv_out);
        tcs::write_metrics_csv(metrics, out);
      }
      if (!json_out.empty()) {
        std::ofstream out(json_out);
        tcs::write_metrics_json(metrics, out);
      }
      tcs::write_metrics_json(metrics, std::cout);
    } else if (*report) {
      const std::string magic = tcs::peek_magic(artifact);
      json j;
      if (magic == "SCSM") {
        j = mask_json(tcs::MeasurementMask::load(artifact));
      } else if (magic == "SCSL") {
        const auto m = tcs::LinearModel::load(artifact);
        j = {{"type", "linear"}, {"N_p", m.block_size()}, {"M_p", m.measurement_size()},
             {"mask_hash", tcs::hex64(m.mask_hash())}, {"samples", m.samples()}, {"ridge", m.ridge()}};
      } else if (magic == "SCSN") {
        const auto m = tcs::MlpModel::load(artifact);
        j = {{"type", "mlp"}, {"K", m.params().hidden_layers()}, {"N_p", m.block_size()},
             {"M_p", m.measurement_size()}, {"mask_hash", tcs::hex64(m.mask_hash())},
             {"parameters", m.params().parameter_count()}};
      } else if (magic == "SCSD") {
        j = dataset_header_json(artifact);
      } else {
        throw tcs::FormatError(artifact + " is not a known artifact");
      }
      std::cout << j.dump(2) << '\n';
    } else if (*synth) {
      const auto d = tcs::parse_dims(size);
      spec.width = d.x;
      spec.height = d.y;
      tcs::export_video(tcs::synthesize_video(spec), synth_out, parse_format(format));
      std::cout << json{{"output", synth_out}, {"frames", spec.frames}}.dump(2) << '\n';
    }
  } catch (const tcs::Error& e) {
    std::cerr << json{{"error", e.kind()}, {"message", e.what()}}.dump() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "internal"}, {"message", e.what()}}.dump() << '\n';
    return 3;
  }
  return 0;
}
