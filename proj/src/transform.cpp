#include "ldw/transform.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace ldw {

namespace {

std::size_t padded_index(std::size_t pos, std::size_t len, PaddingMode padding) {
  if (padding == PaddingMode::circular) return pos % len;
  // Reflection without edge repetition has period 2(len - 1).
  const std::size_t period = 2 * (len - 1);
  const std::size_t m = pos % period;
  return m < len ? m : period - m;
}

// idx[o * taps + i] is the source sample read by tap i of output o.
std::vector<std::size_t> tap_table(std::size_t len, std::size_t taps, PaddingMode padding) {
  const std::size_t outputs = len / 2;
  std::vector<std::size_t> idx(outputs * taps);
  for (std::size_t o = 0; o < outputs; ++o) {
    for (std::size_t i = 0; i < taps; ++i) {
      idx[o * taps + i] = padded_index(2 * o + i, len, padding);
    }
  }
  return idx;
}

void require_even(std::size_t height, std::size_t width, const char* op) {
  if (height % 2 != 0 || width % 2 != 0 || height < 2 || width < 2) {
    throw DimensionError(std::string(op) + " requires even height and width >= 2, got " +
                         std::to_string(height) + "x" + std::to_string(width));
  }
}

// Index tables and sizes shared by every pass over one map geometry.
struct Geometry {
  std::size_t channels, height, width, half_h, half_w, taps;
  std::vector<std::size_t> cols;  // horizontal taps, indexed by x'
  std::vector<std::size_t> rows;  // vertical taps, indexed by y'

  Geometry(std::size_t c, std::size_t h, std::size_t w, std::size_t k, PaddingMode padding)
      : channels(c), height(h), width(w), half_h(h / 2), half_w(w / 2), taps(k),
        cols(tap_table(w, k, padding)), rows(tap_table(h, k, padding)) {}

  std::size_t full_plane() const { return height * width; }
  std::size_t mid_plane() const { return height * half_w; }
  std::size_t sub_plane() const { return half_h * half_w; }
};

// X (H x W) -> Y^L, Y^H (H x W/2).
std::uint64_t horizontal_analysis(const Geometry& g, const double* in,
                                  std::span<const double> low, std::span<const double> high,
                                  double* yl, double* yh) {
  std::uint64_t macs = 0;
  for (std::size_t y = 0; y < g.height; ++y) {
    const double* row = in + y * g.width;
    for (std::size_t xo = 0; xo < g.half_w; ++xo) {
      const std::size_t* idx = &g.cols[xo * g.taps];
      double sl = 0.0, sh = 0.0;
      for (std::size_t i = 0; i < g.taps; ++i) {
        const double v = row[idx[i]];
        sl += low[i] * v;
        sh += high[i] * v;
      }
      macs += 2 * g.taps;
      yl[y * g.half_w + xo] = sl;
      yh[y * g.half_w + xo] = sh;
    }
  }
  return macs;
}

// Y^L, Y^H (H x W/2) -> LL, LH, HL, HH (H/2 x W/2). Outputs must be zeroed.
std::uint64_t vertical_analysis(const Geometry& g, const double* yl, const double* yh,
                                std::span<const double> low, std::span<const double> high,
                                double* ll, double* lh, double* hl, double* hh) {
  std::uint64_t macs = 0;
  const std::size_t w2 = g.half_w;
  for (std::size_t yo = 0; yo < g.half_h; ++yo) {
    double* oll = ll + yo * w2;
    double* olh = lh + yo * w2;
    double* ohl = hl + yo * w2;
    double* ohh = hh + yo * w2;
    for (std::size_t j = 0; j < g.taps; ++j) {
      const std::size_t r = g.rows[yo * g.taps + j];
      const double* rl = yl + r * w2;
      const double* rh = yh + r * w2;
      const double wl = low[j];
      const double wh = high[j];
      for (std::size_t xo = 0; xo < w2; ++xo) {
        oll[xo] += wl * rl[xo];
        olh[xo] += wh * rl[xo];
        ohl[xo] += wl * rh[xo];
        ohh[xo] += wh * rh[xo];
      }
      macs += 4 * w2;
    }
  }
  return macs;
}

// Adjoint of vertical_analysis; accumulates into yl, yh.
void vertical_synthesis(const Geometry& g, const double* ll, const double* lh,
                        const double* hl, const double* hh, std::span<const double> low,
                        std::span<const double> high, double* yl, double* yh) {
  const std::size_t w2 = g.half_w;
  for (std::size_t yo = 0; yo < g.half_h; ++yo) {
    const double* ill = ll + yo * w2;
    const double* ilh = lh + yo * w2;
    const double* ihl = hl + yo * w2;
    const double* ihh = hh + yo * w2;
    for (std::size_t j = 0; j < g.taps; ++j) {
      const std::size_t r = g.rows[yo * g.taps + j];
      double* rl = yl + r * w2;
      double* rh = yh + r * w2;
      const double wl = low[j];
      const double wh = high[j];
      for (std::size_t xo = 0; xo < w2; ++xo) {
        rl[xo] += wl * ill[xo] + wh * ilh[xo];
        rh[xo] += wl * ihl[xo] + wh * ihh[xo];
      }
    }
  }
}

// Adjoint of horizontal_analysis; accumulates into out.
void horizontal_synthesis(const Geometry& g, const double* yl, const double* yh,
                          std::span<const double> low, std::span<const double> high,
                          double* out) {
  for (std::size_t y = 0; y < g.height; ++y) {
    double* row = out + y * g.width;
    for (std::size_t xo = 0; xo < g.half_w; ++xo) {
      const std::size_t* idx = &g.cols[xo * g.taps];
      const double a = yl[y * g.half_w + xo];
      const double b = yh[y * g.half_w + xo];
      for (std::size_t i = 0; i < g.taps; ++i) {
        row[idx[i]] += low[i] * a + high[i] * b;
      }
    }
  }
}

void check_subbands(const SubbandSet& s) {
  const FeatureMap& ref = s.ll;
  if (!ref.same_shape(s.lh) || !ref.same_shape(s.hl) || !ref.same_shape(s.hh)) {
    throw DimensionError("subbands must share one shape");
  }
  if (s.source_height != 2 * ref.height() || s.source_width != 2 * ref.width()) {
    throw DimensionError("subband source dimensions must be twice the subband size");
  }
}

FeatureMap to_map(std::size_t c, std::size_t h, std::size_t w, std::vector<double> data) {
  return FeatureMap(c, h, w, std::move(data));
}

}  // namespace

SubbandSet SubbandSet::from_maps(FeatureMap ll, FeatureMap lh, FeatureMap hl, FeatureMap hh) {
  const std::size_t h = ll.height();
  const std::size_t w = ll.width();
  SubbandSet s{std::move(ll), std::move(lh), std::move(hl), std::move(hh), 2 * h, 2 * w};
  check_subbands(s);
  return s;
}

SubbandSet SubbandSet::zeros(std::size_t channels, std::size_t source_height,
                             std::size_t source_width) {
  require_even(source_height, source_width, "SubbandSet::zeros");
  const auto z = FeatureMap::zeros(channels, source_height / 2, source_width / 2);
  return SubbandSet{z, z, z, z, source_height, source_width};
}

double SubbandSet::dot(const SubbandSet& other) const {
  check_subbands(*this);
  check_subbands(other);
  if (!ll.same_shape(other.ll)) throw DimensionError("subband shape mismatch in dot");
  double s = 0.0;
  auto acc = [&s](const FeatureMap& a, const FeatureMap& b) {
    for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
  };
  acc(ll, other.ll);
  acc(lh, other.lh);
  acc(hl, other.hl);
  acc(hh, other.hh);
  return s;
}

SubbandSet decompose(const FeatureMap& map, const WaveletFilterPair& pair,
                     PaddingMode padding, MacCounter* counter) {
  require_even(map.height(), map.width(), "decompose");
  const Geometry g(map.channels(), map.height(), map.width(), pair.taps(), padding);
  const std::size_t n = g.channels * g.sub_plane();
  std::vector<double> yl(g.mid_plane()), yh(g.mid_plane());
  std::vector<double> ll(n, 0.0), lh(n, 0.0), hl(n, 0.0), hh(n, 0.0);
  std::uint64_t macs = 0;
  for (std::size_t c = 0; c < g.channels; ++c) {
    const double* in = map.data().data() + c * g.full_plane();
    const std::size_t off = c * g.sub_plane();
    macs += horizontal_analysis(g, in, pair.low(), pair.high(), yl.data(), yh.data());
    macs += vertical_analysis(g, yl.data(), yh.data(), pair.low(), pair.high(),
                              ll.data() + off, lh.data() + off, hl.data() + off,
                              hh.data() + off);
  }
  if (counter) counter->macs += macs;
  return SubbandSet{to_map(g.channels, g.half_h, g.half_w, std::move(ll)),
                    to_map(g.channels, g.half_h, g.half_w, std::move(lh)),
                    to_map(g.channels, g.half_h, g.half_w, std::move(hl)),
                    to_map(g.channels, g.half_h, g.half_w, std::move(hh)),
                    g.height, g.width};
}

FeatureMap reconstruct(const SubbandSet& subbands, const WaveletFilterPair& pair,
                       PaddingMode padding) {
  check_subbands(subbands);
  const Geometry g(subbands.ll.channels(), subbands.source_height, subbands.source_width,
                   pair.taps(), padding);
  std::vector<double> out(g.channels * g.full_plane(), 0.0);
  std::vector<double> yl(g.mid_plane()), yh(g.mid_plane());
  for (std::size_t c = 0; c < g.channels; ++c) {
    const std::size_t off = c * g.sub_plane();
    std::fill(yl.begin(), yl.end(), 0.0);
    std::fill(yh.begin(), yh.end(), 0.0);
    vertical_synthesis(g, subbands.ll.data().data() + off, subbands.lh.data().data() + off,
                       subbands.hl.data().data() + off, subbands.hh.data().data() + off,
                       pair.low(), pair.high(), yl.data(), yh.data());
    horizontal_synthesis(g, yl.data(), yh.data(), pair.low(), pair.high(),
                         out.data() + c * g.full_plane());
  }
  return to_map(g.channels, g.height, g.width, std::move(out));
}

SubbandSet decompose_dense2d(const FeatureMap& map, const WaveletFilterPair& pair,
                             PaddingMode padding, MacCounter* counter) {
  require_even(map.height(), map.width(), "decompose_dense2d");
  const Geometry g(map.channels(), map.height(), map.width(), pair.taps(), padding);
  const std::size_t k = g.taps;
  // Outer-product kernels, row j (vertical tap) by column i (horizontal tap).
  std::vector<double> kll(k * k), klh(k * k), khl(k * k), khh(k * k);
  const auto low = pair.low();
  const auto high = pair.high();
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < k; ++i) {
      kll[j * k + i] = low[j] * low[i];
      klh[j * k + i] = high[j] * low[i];
      khl[j * k + i] = low[j] * high[i];
      khh[j * k + i] = high[j] * high[i];
    }
  }
  const std::size_t n = g.channels * g.sub_plane();
  std::vector<double> ll(n), lh(n), hl(n), hh(n);
  std::uint64_t macs = 0;
  for (std::size_t c = 0; c < g.channels; ++c) {
    const double* in = map.data().data() + c * g.full_plane();
    for (std::size_t yo = 0; yo < g.half_h; ++yo) {
      for (std::size_t xo = 0; xo < g.half_w; ++xo) {
        double sll = 0.0, slh = 0.0, shl = 0.0, shh = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
          const double* row = in + g.rows[yo * k + j] * g.width;
          const std::size_t* cols = &g.cols[xo * k];
          for (std::size_t i = 0; i < k; ++i) {
            const double v = row[cols[i]];
            sll += kll[j * k + i] * v;
            slh += klh[j * k + i] * v;
            shl += khl[j * k + i] * v;
            shh += khh[j * k + i] * v;
          }
          macs += 4 * k;
        }
        const std::size_t o = c * g.sub_plane() + yo * g.half_w + xo;
        ll[o] = sll;
        lh[o] = slh;
        hl[o] = shl;
        hh[o] = shh;
      }
    }
  }
  if (counter) counter->macs += macs;
  return SubbandSet{to_map(g.channels, g.half_h, g.half_w, std::move(ll)),
                    to_map(g.channels, g.half_h, g.half_w, std::move(lh)),
                    to_map(g.channels, g.half_h, g.half_w, std::move(hl)),
                    to_map(g.channels, g.half_h, g.half_w, std::move(hh)),
                    g.height, g.width};
}

// The taps enter twice: once in the horizontal stage producing Y^L/Y^H and once
// in the vertical stage. The vertical contribution correlates the upstream bands
// with the intermediates; the horizontal one correlates the input with the
// upstream pulled back through the vertical stage.
FilterGradient decompose_filter_jvp(const FeatureMap& map, const WaveletFilterPair& pair,
                                    const SubbandSet& upstream, PaddingMode padding) {
  require_even(map.height(), map.width(), "decompose_filter_jvp");
  check_subbands(upstream);
  if (upstream.ll.channels() != map.channels() || upstream.source_height != map.height() ||
      upstream.source_width != map.width()) {
    throw DimensionError("decompose_filter_jvp: upstream shape does not match the map");
  }
  const Geometry g(map.channels(), map.height(), map.width(), pair.taps(), padding);
  const std::size_t k = g.taps;
  const std::size_t w2 = g.half_w;
  FilterGradient grad(k);
  std::vector<double> yl(g.mid_plane()), yh(g.mid_plane());
  std::vector<double> gl(g.mid_plane()), gh(g.mid_plane());

  for (std::size_t c = 0; c < g.channels; ++c) {
    const double* in = map.data().data() + c * g.full_plane();
    const std::size_t off = c * g.sub_plane();
    const double* ull = upstream.ll.data().data() + off;
    const double* ulh = upstream.lh.data().data() + off;
    const double* uhl = upstream.hl.data().data() + off;
    const double* uhh = upstream.hh.data().data() + off;

    horizontal_analysis(g, in, pair.low(), pair.high(), yl.data(), yh.data());

    for (std::size_t yo = 0; yo < g.half_h; ++yo) {
      for (std::size_t j = 0; j < k; ++j) {
        const std::size_t r = g.rows[yo * k + j];
        double dl = 0.0, dh = 0.0;
        for (std::size_t xo = 0; xo < w2; ++xo) {
          const double a = yl[r * w2 + xo];
          const double b = yh[r * w2 + xo];
          const std::size_t o = yo * w2 + xo;
          dl += ull[o] * a + uhl[o] * b;
          dh += ulh[o] * a + uhh[o] * b;
        }
        grad.low[j] += dl;
        grad.high[j] += dh;
      }
    }

    std::fill(gl.begin(), gl.end(), 0.0);
    std::fill(gh.begin(), gh.end(), 0.0);
    vertical_synthesis(g, ull, ulh, uhl, uhh, pair.low(), pair.high(), gl.data(), gh.data());

    for (std::size_t y = 0; y < g.height; ++y) {
      const double* row = in + y * g.width;
      for (std::size_t xo = 0; xo < w2; ++xo) {
        const std::size_t* idx = &g.cols[xo * k];
        const double a = gl[y * w2 + xo];
        const double b = gh[y * w2 + xo];
        for (std::size_t i = 0; i < k; ++i) {
          grad.low[i] += a * row[idx[i]];
          grad.high[i] += b * row[idx[i]];
        }
      }
    }
  }
  return grad;
}

// reconstruct is the adjoint of decompose for every pair, so
// <u, reconstruct_p(s)> = <decompose_p(u), s> and the tap gradients coincide.
FilterGradient reconstruct_filter_jvp(const SubbandSet& subbands,
                                      const WaveletFilterPair& pair,
                                      const FeatureMap& upstream, PaddingMode padding) {
  check_subbands(subbands);
  if (upstream.channels() != subbands.ll.channels() ||
      upstream.height() != subbands.source_height ||
      upstream.width() != subbands.source_width) {
    throw DimensionError("reconstruct_filter_jvp: upstream shape does not match the output");
  }
  return decompose_filter_jvp(upstream, pair, subbands, padding);
}

FlopReport flop_report(std::size_t taps, std::size_t channels, std::size_t height,
                       std::size_t width) {
  require_even(height, width, "flop_report");
  const std::uint64_t k = taps;
  const std::uint64_t volume = static_cast<std::uint64_t>(channels) * height * width;
  const std::uint64_t separable = 2 * k * volume;
  const std::uint64_t dense = k * k * volume;
  return {separable, dense, static_cast<double>(dense) / static_cast<double>(separable)};
}

}  // namespace ldw
