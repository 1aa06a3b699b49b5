#include "ldw/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <ostream>
#include <sstream>

#include "ldw/attention.hpp"
#include "ldw/io.hpp"
#include "ldw/random.hpp"
#include "ldw/training.hpp"
#include "ldw/transform.hpp"

namespace ldw::cli {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

PaddingMode parse_padding(const std::string& s) {
  return s == "reflect" ? PaddingMode::reflect : PaddingMode::circular;
}

io::DType parse_dtype(const std::string& s) {
  return s == "f32" ? io::DType::f32 : io::DType::f64;
}

struct DecomposeArgs {
  std::string input, filters, output, padding = "circular", dtype = "f64";
};

struct ReconstructArgs {
  std::string input, filters, output, padding = "circular", reference;
  bool as_pgm = false;
};

struct TrainArgs {
  std::string images, out, log, pretrain = "on", padding = "circular";
  std::size_t taps = 4;
  std::size_t epochs = 400;
  double lr = 1e-4;
  double weight_decay = 1e-4;
  double task_weight = 1.0;
  std::vector<double> wavelet_weights{1.0, 1.0, 1.0, 1.0};
  std::uint64_t seed = 0;
  bool step_decay = false;
};

struct BenchArgs {
  std::size_t taps = 4, channels = 3, iters = 20;
  std::string size = "256x256";
  std::uint64_t seed = 0;
};

struct AttentionArgs {
  std::string input, params, output, listing, normalize = "on";
};

struct InitAttentionArgs {
  std::size_t channels = 0, reduction = 4;
  std::uint64_t seed = 0;
  bool zero = false;
  std::string output;
};

int cmd_decompose(const DecomposeArgs& a, std::ostream&) {
  const FeatureMap map = io::read_map(a.input);
  const WaveletFilterPair pair = io::read_filters(a.filters);
  const SubbandSet bands = decompose(map, pair, parse_padding(a.padding));
  io::write_container(a.output, io::subbands_to_container(bands, parse_dtype(a.dtype)));
  return kOk;
}

int cmd_reconstruct(const ReconstructArgs& a, std::ostream& out) {
  const SubbandSet bands = io::subbands_from_container(io::read_container(a.input));
  const WaveletFilterPair pair = io::read_filters(a.filters);
  FeatureMap rec = reconstruct(bands, pair, parse_padding(a.padding));
  if (a.as_pgm) {
    io::write_pgm(a.output, rec);
    rec = io::quantize_8bit(rec);
  } else {
    io::write_container(a.output, {io::DType::f64, {{"map", rec}}});
  }
  if (!a.reference.empty()) {
    const FeatureMap ref = io::read_map(a.reference);
    const double db = psnr(ref, rec, 1.0);
    out << "psnr " << (psnr_is_identical(db) ? std::string("identical") : fmt(db) + " dB")
        << "\n";
  }
  return kOk;
}

int cmd_check(const std::string& filters, std::ostream& out) {
  const WaveletFilterPair pair = io::read_filters(filters);
  const ConstraintResiduals r = constraint_residuals(pair);
  out << "taps " << pair.taps() << "\n"
      << "residual_low_energy " << fmt(r.low_energy) << "\n"
      << "residual_low_sum " << fmt(r.low_sum) << "\n"
      << "residual_high_sum " << fmt(r.high_sum) << "\n"
      << "residual_high_energy " << fmt(r.high_energy) << "\n"
      << "loss_low " << fmt(loss_low(pair)) << "\n"
      << "loss_high " << fmt(loss_high(pair)) << "\n"
      << "loss_reverse " << fmt(loss_reverse(pair)) << "\n"
      << "loss_sym " << fmt(loss_sym(pair)) << "\n"
      << "loss_wavelet " << fmt(loss_wavelet(pair)) << "\n";
  const bool ok = r.max_abs() < 1e-6;
  out << "status " << (ok ? "ok" : "violated") << "\n";
  return ok ? kOk : kCheckFailed;
}

std::vector<FeatureMap> load_image_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw io::FormatError("image directory '" + dir.string() + "' does not exist");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<FeatureMap> images;
  for (const auto& f : files) images.push_back(io::read_map(f));
  if (images.empty()) {
    throw io::FormatError("image directory '" + dir.string() + "' holds no images");
  }
  return images;
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
  TrainConfig cfg;
  cfg.learning_rate = a.lr;
  cfg.epochs = a.epochs;
  cfg.weight_decay = a.weight_decay;
  cfg.task_weight = a.task_weight;
  cfg.wavelet_weights = {a.wavelet_weights[0], a.wavelet_weights[1], a.wavelet_weights[2],
                         a.wavelet_weights[3]};
  cfg.seed = a.seed;
  cfg.pretrain = a.pretrain == "on";
  cfg.step_decay = a.step_decay;
  cfg.padding = parse_padding(a.padding);

  const std::vector<FeatureMap> images = load_image_dir(a.images);
  const TrainReport report = train_filters(images, a.taps, cfg);
  io::write_filters(a.out, report.final_pair);
  if (!a.log.empty()) {
    const std::string log = io::format_train_log(report);
    io::write_bytes(a.log, std::span(reinterpret_cast<const std::uint8_t*>(log.data()),
                                     log.size()));
  }
  if (!report.history.empty()) {
    const auto& last = report.history.back();
    out << "epochs " << report.history.size() << "\n"
        << "final_task_loss " << fmt(last.task_loss) << "\n"
        << "final_wavelet_loss " << fmt(last.wavelet_loss) << "\n"
        << "final_total_loss " << fmt(last.total_loss) << "\n";
  }
  return kOk;
}

std::pair<std::size_t, std::size_t> parse_size(std::string s) {
  // Accept "HxW", "HXW" and "H×W".
  for (const std::string sep : {"\xC3\x97", "x", "X"}) {
    const auto p = s.find(sep);
    if (p != std::string::npos) {
      std::size_t h = 0, w = 0;
      try {
        std::size_t used = 0;
        h = std::stoul(s.substr(0, p), &used);
        if (used != p) throw std::invalid_argument("");
        const std::string rest = s.substr(p + sep.size());
        w = std::stoul(rest, &used);
        if (used != rest.size()) throw std::invalid_argument("");
      } catch (const std::exception&) {
        break;
      }
      return {h, w};
    }
  }
  throw std::invalid_argument("--size must look like HxW, got '" + s + "'");
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double max_abs_diff(const SubbandSet& a, const SubbandSet& b) {
  double m = 0.0;
  const FeatureMap* xa[] = {&a.ll, &a.lh, &a.hl, &a.hh};
  const FeatureMap* xb[] = {&b.ll, &b.lh, &b.hl, &b.hh};
  for (int k = 0; k < 4; ++k) {
    for (std::size_t i = 0; i < xa[k]->size(); ++i) {
      m = std::max(m, std::abs(xa[k]->data()[i] - xb[k]->data()[i]));
    }
  }
  return m;
}

int cmd_bench(const BenchArgs& a, std::ostream& out, std::ostream& err) {
  const auto [h, w] = parse_size(a.size);
  const FlopReport flops = flop_report(a.taps, a.channels, h, w);
  Rng rng(a.seed);
  std::vector<double> data(a.channels * h * w);
  for (double& v : data) v = rng.uniform(-1.0, 1.0);
  const FeatureMap map(a.channels, h, w, std::move(data));
  const WaveletFilterPair pair = random_constrained(a.taps, a.seed);

  MacCounter sep_count, dense_count;
  const SubbandSet sep = decompose(map, pair, PaddingMode::circular, &sep_count);
  const SubbandSet dense = decompose_dense2d(map, pair, PaddingMode::circular, &dense_count);
  const double diff = max_abs_diff(sep, dense);
  if (diff > 1e-10) {
    err << "separable and dense decompositions disagree (max abs diff " << fmt(diff) << ")\n";
    return kCheckFailed;
  }

  using clock = std::chrono::steady_clock;
  std::vector<double> sep_ms, dense_ms;
  for (std::size_t i = 0; i < a.iters; ++i) {
    auto t0 = clock::now();
    volatile double sink = decompose(map, pair).ll.data()[0];
    auto t1 = clock::now();
    sink = decompose_dense2d(map, pair).ll.data()[0];
    auto t2 = clock::now();
    (void)sink;
    sep_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    dense_ms.push_back(std::chrono::duration<double, std::milli>(t2 - t1).count());
  }
  out << "taps " << a.taps << "\n"
      << "size " << h << "x" << w << "\n"
      << "channels " << a.channels << "\n"
      << "separable_macs " << flops.separable_macs << "\n"
      << "dense_macs " << flops.dense_macs << "\n"
      << "mac_ratio " << fmt(flops.ratio) << "\n"
      << "executed_separable_macs " << sep_count.macs << "\n"
      << "executed_dense_macs " << dense_count.macs << "\n"
      << "max_abs_diff " << fmt(diff) << "\n";
  if (a.iters > 0) {
    const double s = median(sep_ms);
    const double d = median(dense_ms);
    out << "separable_median_ms " << fmt(s) << "\n"
        << "dense_median_ms " << fmt(d) << "\n"
        << "speedup " << fmt(d / s) << "\n";
  }
  return kOk;
}

int cmd_attention(const AttentionArgs& a, std::ostream&) {
  const FeatureMap map = io::read_map(a.input);
  const AttentionParams params = io::attention_from_container(io::read_container(a.params));
  const EnergyAttention result = energy_attention(map, params, a.normalize == "on");
  io::write_container(a.output, {io::DType::f64, {{"map", result.output}}});
  std::string listing;
  for (std::size_t c = 0; c < result.gates.size(); ++c) {
    listing += std::to_string(c) + "\t" + fmt(result.energies[c]) + "\t" +
               fmt(result.gates[c]) + "\n";
  }
  const std::string path = a.listing.empty() ? a.output + ".gates.txt" : a.listing;
  io::write_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(listing.data()),
                                  listing.size()));
  return kOk;
}

int cmd_init_attention(const InitAttentionArgs& a, std::ostream&) {
  const AttentionParams p = a.zero ? AttentionParams::zeros(a.channels, a.reduction)
                                   : AttentionParams::random(a.channels, a.reduction, a.seed);
  io::write_container(a.output, io::attention_to_container(p));
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Learnable discrete-wavelet pooling tools", "ldwpool"};
  app.require_subcommand(1);
  const auto on_off = CLI::IsMember({"on", "off"});
  const auto paddings = CLI::IsMember({"circular", "reflect"});

  DecomposeArgs dec;
  auto* sc_dec = app.add_subcommand("decompose", "Split a map into LL/LH/HL/HH subbands");
  sc_dec->add_option("--input", dec.input, "PGM image or single-tensor container")->required();
  sc_dec->add_option("--filters", dec.filters, "Filter text file")->required();
  sc_dec->add_option("--output", dec.output, "Output container")->required();
  sc_dec->add_option("--padding", dec.padding)->check(paddings);
  sc_dec->add_option("--dtype", dec.dtype, "Storage type of the output")
      ->check(CLI::IsMember({"f32", "f64"}));

  ReconstructArgs rec;
  auto* sc_rec = app.add_subcommand("reconstruct", "Invert a subband container");
  sc_rec->add_option("--input", rec.input, "Container with LL, LH, HL, HH")->required();
  sc_rec->add_option("--filters", rec.filters)->required();
  sc_rec->add_option("--output", rec.output)->required();
  sc_rec->add_option("--padding", rec.padding)->check(paddings);
  sc_rec->add_flag("--as-pgm", rec.as_pgm, "Write an 8-bit PGM instead of a container");
  sc_rec->add_option("--reference", rec.reference, "Report PSNR (peak 1) against this map");

  std::string check_filters;
  auto* sc_check = app.add_subcommand("check", "Report constraint residuals and losses");
  sc_check->add_option("--filters", check_filters)->required();

  TrainArgs tr;
  auto* sc_train = app.add_subcommand("train", "Learn filter taps on a directory of maps");
  sc_train->add_option("--images", tr.images, "Directory of PGM or container files")
      ->required();
  sc_train->add_option("--taps", tr.taps)->check(CLI::Range(2, 16));
  sc_train->add_option("--epochs", tr.epochs);
  sc_train->add_option("--lr", tr.lr);
  sc_train->add_option("--weight-decay", tr.weight_decay);
  sc_train->add_option("--task-weight", tr.task_weight);
  sc_train->add_option("--pretrain", tr.pretrain)->check(on_off);
  sc_train->add_option("--wavelet-weights", tr.wavelet_weights, "low,high,reverse,sym")
      ->delimiter(',')
      ->expected(4);
  sc_train->add_option("--seed", tr.seed);
  sc_train->add_flag("--step-decay", tr.step_decay, "Scale lr by 0.1 every 100 epochs");
  sc_train->add_option("--padding", tr.padding)->check(paddings);
  sc_train->add_option("--out", tr.out, "Output filter file")->required();
  sc_train->add_option("--log", tr.log, "Per-epoch log file");

  BenchArgs bench;
  auto* sc_bench = app.add_subcommand("bench", "Separable vs dense decomposition cost");
  sc_bench->add_option("--taps", bench.taps)->check(CLI::Range(2, 16));
  sc_bench->add_option("--size", bench.size, "HxW");
  sc_bench->add_option("--channels", bench.channels)->check(CLI::PositiveNumber);
  sc_bench->add_option("--iters", bench.iters);
  sc_bench->add_option("--seed", bench.seed);

  AttentionArgs att;
  auto* sc_att = app.add_subcommand("attention", "Energy-based channel attention");
  sc_att->add_option("--input", att.input)->required();
  sc_att->add_option("--params", att.params, "Container with w1, b1, w2, b2")->required();
  sc_att->add_option("--output", att.output)->required();
  sc_att->add_option("--listing", att.listing, "Energy/gate listing (default OUTPUT.gates.txt)");
  sc_att->add_option("--normalize", att.normalize)->check(on_off);

  InitAttentionArgs init;
  auto* sc_init = app.add_subcommand("init-attention", "Write an attention parameter file");
  sc_init->add_option("--channels", init.channels)->required()->check(CLI::PositiveNumber);
  sc_init->add_option("--reduction", init.reduction)->check(CLI::PositiveNumber);
  sc_init->add_option("--seed", init.seed);
  sc_init->add_flag("--zero", init.zero, "All-zero weights (every gate 0.5)");
  sc_init->add_option("--output", init.output)->required();

  std::vector<std::string> argv_store{"ldwpool"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : argv_store) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "ldwpool: " << e.what() << "\n";
    return kUsageError;
  }

  try {
    if (*sc_dec) return cmd_decompose(dec, out);
    if (*sc_rec) return cmd_reconstruct(rec, out);
    if (*sc_check) return cmd_check(check_filters, out);
    if (*sc_train) return cmd_train(tr, out);
    if (*sc_bench) return cmd_bench(bench, out, err);
    if (*sc_att) return cmd_attention(att, out);
    if (*sc_init) return cmd_init_attention(init, out);
  } catch (const std::exception& e) {
    err << "ldwpool: " << e.what() << "\n";
    return kUsageError;
  }
  return kUsageError;
}

}  // namespace ldw::cli
