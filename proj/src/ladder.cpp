#include <cmath>

#include "critmat/simulator.hpp"

namespace critmat {

namespace {

double log1p_exp(double l) {
  if (l == -INFINITY) return 0.0;
  if (l > 40.0) return l + std::log1p(std::exp(-l));
  return std::log1p(std::exp(l));
}

}  // namespace

std::vector<double> LadderSample::block_product_log_norms() const {
  std::vector<double> out;
  if (blocks.empty()) return out;
  ProductBundle p(blocks.front().a.dim());
  for (const auto& blk : blocks) {
    p.left_multiply(blk.a);
    out.push_back(p.log_norm());
  }
  return out;
}

double LadderSample::reconstruction_error(const ConePoint& x0) const {
  ScaledVector z(x0.coords());
  for (const auto& blk : blocks) {
    z.apply(blk.a);
    z.add(blk.b);
  }
  if (direct.is_zero()) return z.is_zero() ? 0.0 : INFINITY;
  z.add(direct, -1.0);
  if (z.is_zero()) return 0.0;
  return std::exp(z.log_norm() - direct.log_norm());
}

LadderSample ladder_decomposition(const EnsembleSpec& spec, const ConePoint& x0, double a,
                                  std::int64_t k_max, std::int64_t cap, std::uint64_t seed,
                                  std::uint64_t index) {
  if (!(a > 1.0) || !std::isfinite(a)) throw std::invalid_argument("ladder needs a > 1");
  if (k_max < 1) throw std::invalid_argument("ladder needs k_max >= 1");
  if (cap < 1) throw std::invalid_argument("cap must be >= 1");
  if (x0.dim() != spec.dim()) throw std::invalid_argument("x0 has the wrong dimension");
  const std::size_t d = spec.dim();
  const double bound = 1.0 / a;
  const std::vector<double> zeros(d, 0.0);

  RandomStream rng(seed, index, StreamTag::main);
  EnsembleSampler sampler(spec);
  LadderSample s{a, {0}, {}, false, ScaledVector(x0.coords())};
  ScaledVector x(x0.coords());
  ScaledVector y(zeros);
  ProductBundle p(d);

  std::int64_t n = 0;
  while (static_cast<std::int64_t>(s.blocks.size()) < k_max) {
    if (n == cap) {
      if (s.blocks.empty()) throw CapExceeded(cap);
      s.truncated = true;
      break;
    }
    const auto draw = sampler.draw(rng);
    ++n;
    x.apply_affine(draw.a, draw.b.coords());
    y.apply_affine(draw.a, draw.b.coords());
    p.left_multiply(draw.a);
    if (p.norm_at_most(bound)) {
      s.blocks.push_back({n, p.to_matrix(), y, p.log_norm(), log1p_exp(y.log_norm())});
      s.times.push_back(n);
      s.direct = x;
      p = ProductBundle(d);
      y = ScaledVector(zeros);
    }
  }
  return s;
}

BlockMomentProbe block_moment_probe(const EnsembleSpec& spec, const ConePoint& x0, double a,
                                    std::int64_t blocks, std::int64_t cap, std::uint64_t seed) {
  BlockMomentProbe probe{};
  probe.note =
      "stabilization probe only: a finite run cannot show that E ln(1 + |B~_1|) is finite";
  LadderSample s = [&] {
    try {
      return ladder_decomposition(spec, x0, a, blocks, cap, seed, 0);
    } catch (const CapExceeded&) {
      return LadderSample{a, {0}, {}, true, ScaledVector(x0.coords())};
    }
  }();
  probe.truncated = s.truncated || s.blocks.empty();
  double sum = 0.0;
  for (std::size_t l = 0; l < s.blocks.size(); ++l) {
    sum += s.blocks[l].log1p_norm_b;
    probe.running_mean.push_back(sum / static_cast<double>(l + 1));
  }
  const std::size_t k = probe.running_mean.size();
  if (k >= 10) {
    const double last = probe.running_mean[k - 1];
    const double earlier = probe.running_mean[k / 10 - 1];
    probe.last_decade_drift = last != 0.0 ? std::abs(last - earlier) / std::abs(last) : 0.0;
    probe.stable = probe.last_decade_drift <= 0.1;
  } else {
    probe.last_decade_drift = NAN;
    probe.stable = false;
  }
  return probe;
}

}  // namespace critmat
