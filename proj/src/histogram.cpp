#include "critmat/histogram.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

namespace critmat {

namespace {

constexpr double kMaxLog2Radius = 1e7;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

OccupationHistogram::OccupationHistogram(std::size_t dim, HistogramConfig config)
    : dim_(dim), config_(config) {
  if (!(config_.bin_width_log2 > 0.0)) throw std::invalid_argument("bin width must be positive");
  if (!(config_.ref_radius > 1.0)) throw std::invalid_argument("reference radius must exceed 1");
  if (config_.batches < 2) throw std::invalid_argument("need at least two batches");
  cells_ = config_.direction_cells ? static_cast<int>(dim * (dim - 1) + 1) : 1;
  ref_batch_.assign(static_cast<std::size_t>(config_.batches), 0);
}

OccupationHistogram OccupationHistogram::from_radial_counts(
    std::size_t dim, HistogramConfig config,
    const std::vector<std::pair<std::int64_t, std::uint64_t>>& counts) {
  config.direction_cells = false;
  OccupationHistogram h(dim, config);
  const double r = std::log2(config.ref_radius);
  for (const auto& [k, c] : counts) {
    if (c == 0) continue;
    auto& e = h.bins_[h.key(k, 0)];
    e.count += c;
    e.batch.assign(static_cast<std::size_t>(config.batches), 0);
    e.batch[0] = e.count;
    h.total_ += c;
    const double lo = static_cast<double>(k) * config.bin_width_log2;
    if (lo >= -r && lo + config.bin_width_log2 <= r) {
      h.ref_count_ += c;
      h.ref_batch_[0] += c;
    }
  }
  return h;
}

int OccupationHistogram::direction_cell(std::span<const double> coords) noexcept {
  const std::size_t d = coords.size();
  double l1 = 0.0;
  for (double v : coords) l1 += std::abs(v);
  std::size_t i1 = 0;
  for (std::size_t i = 1; i < d; ++i)
    if (coords[i] > coords[i1]) i1 = i;
  std::size_t i2 = i1 == 0 ? 1 : 0;
  for (std::size_t i = 0; i < d; ++i)
    if (i != i1 && coords[i] > coords[i2]) i2 = i;
  double dev = 0.0;
  const double center = l1 / static_cast<double>(d);
  for (double v : coords) dev = std::max(dev, std::abs(v - center));
  if (dev <= l1 / (2.0 * static_cast<double>(d))) return static_cast<int>(d * (d - 1));
  return static_cast<int>(i1 * (d - 1) + (i2 < i1 ? i2 : i2 - 1));
}

void OccupationHistogram::add(double log2_radius, std::span<const double> coords, int batch) {
  ++total_;
  if (!std::isfinite(log2_radius) || std::abs(log2_radius) > kMaxLog2Radius) {
    ++out_of_range_;
    return;
  }
  const auto b = static_cast<std::size_t>(std::clamp(batch, 0, config_.batches - 1));
  const auto k = static_cast<std::int64_t>(std::floor(log2_radius / config_.bin_width_log2));
  const int cell = config_.direction_cells ? direction_cell(coords) : 0;
  auto& e = bins_[key(k, cell)];
  if (e.batch.empty()) e.batch.assign(static_cast<std::size_t>(config_.batches), 0);
  ++e.count;
  ++e.batch[b];
  const double r = std::log2(config_.ref_radius);
  if (log2_radius >= -r && log2_radius < r) {
    ++ref_count_;
    ++ref_batch_[b];
  }
}

void OccupationHistogram::merge(const OccupationHistogram& other) {
  if (other.dim_ != dim_ || !(other.config_ == config_)) {
    throw std::invalid_argument("cannot merge histograms with different layouts");
  }
  for (const auto& [k, e] : other.bins_) {
    auto& mine = bins_[k];
    if (mine.batch.empty()) mine.batch.assign(e.batch.size(), 0);
    mine.count += e.count;
    for (std::size_t b = 0; b < e.batch.size(); ++b) mine.batch[b] += e.batch[b];
  }
  for (std::size_t b = 0; b < ref_batch_.size(); ++b) ref_batch_[b] += other.ref_batch_[b];
  ref_count_ += other.ref_count_;
  total_ += other.total_;
  out_of_range_ += other.out_of_range_;
}

std::int64_t OccupationHistogram::radius_index_of(std::int64_t k) const noexcept {
  return floor_div(k, cells_);
}

OccupationHistogram OccupationHistogram::coarsened() const {
  HistogramConfig c = config_;
  c.bin_width_log2 *= 2.0;
  OccupationHistogram h(dim_, c);
  for (const auto& [k, e] : bins_) {
    const std::int64_t r = radius_index_of(k);
    const int cell = static_cast<int>(k - r * cells_);
    auto& t = h.bins_[h.key(floor_div(r, 2), cell)];
    if (t.batch.empty()) t.batch.assign(e.batch.size(), 0);
    t.count += e.count;
    for (std::size_t b = 0; b < e.batch.size(); ++b) t.batch[b] += e.batch[b];
  }
  h.ref_batch_ = ref_batch_;
  h.ref_count_ = ref_count_;
  h.total_ = total_;
  h.out_of_range_ = out_of_range_;
  return h;
}

std::uint64_t OccupationHistogram::binned_count() const noexcept {
  std::uint64_t s = 0;
  for (const auto& [k, e] : bins_) s += e.count;
  return s;
}

double OccupationHistogram::stderr_of(std::uint64_t count,
                                      const std::vector<std::uint64_t>& batch) const {
  if (ref_count_ == 0) return NAN;
  const double nb = static_cast<double>(batch.size());
  const double m = static_cast<double>(count) / static_cast<double>(ref_count_);
  double ss = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const double r = static_cast<double>(batch[b]) - m * static_cast<double>(ref_batch_[b]);
    ss += r * r;
  }
  const double rbar = static_cast<double>(ref_count_) / nb;
  return std::sqrt(ss / (nb * (nb - 1.0))) / rbar;
}

std::vector<HistogramRow> OccupationHistogram::rows() const {
  std::vector<std::int64_t> keys;
  for (const auto& [k, e] : bins_)
    if (e.count > 0) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  std::vector<HistogramRow> out;
  const double w = config_.bin_width_log2;
  for (std::int64_t k : keys) {
    const auto& e = bins_.at(k);
    const std::int64_t r = radius_index_of(k);
    const double lo = static_cast<double>(r) * w;
    const double mass = ref_count_ ? static_cast<double>(e.count) / static_cast<double>(ref_count_)
                                   : NAN;
    out.push_back({lo, lo + w, static_cast<int>(k - r * cells_), e.count, mass,
                   stderr_of(e.count, e.batch)});
  }
  return out;
}

std::vector<HistogramRow> OccupationHistogram::radial_rows() const {
  std::map<std::int64_t, Entry> radial;
  for (const auto& [k, e] : bins_) {
    auto& t = radial[radius_index_of(k)];
    if (t.batch.empty()) t.batch.assign(e.batch.size(), 0);
    t.count += e.count;
    for (std::size_t b = 0; b < e.batch.size(); ++b) t.batch[b] += e.batch[b];
  }
  std::vector<HistogramRow> out;
  const double w = config_.bin_width_log2;
  for (const auto& [r, e] : radial) {
    if (e.count == 0) continue;
    const double lo = static_cast<double>(r) * w;
    const double mass = ref_count_ ? static_cast<double>(e.count) / static_cast<double>(ref_count_)
                                   : NAN;
    out.push_back({lo, lo + w, -1, e.count, mass, stderr_of(e.count, e.batch)});
  }
  return out;
}

std::uint64_t OccupationHistogram::count_between(double log2_lo, double log2_hi) const {
  const double w = config_.bin_width_log2;
  const double eps = 1e-9 * w;
  std::uint64_t s = 0;
  for (const auto& [k, e] : bins_) {
    const double lo = static_cast<double>(radius_index_of(k)) * w;
    if (lo >= log2_lo - eps && lo + w <= log2_hi + eps) s += e.count;
  }
  return s;
}

double OccupationHistogram::mass_between(double log2_lo, double log2_hi) const {
  if (ref_count_ == 0) throw std::logic_error("histogram has an empty reference window");
  return static_cast<double>(count_between(log2_lo, log2_hi)) / static_cast<double>(ref_count_);
}

std::string OccupationHistogram::to_csv() const {
  std::string out = "log2_radius_lo,log2_radius_hi,direction_cell,count,normalized_mass,stderr\n";
  char buf[256];
  for (const auto& r : rows()) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d,%llu,%.17g,%.17g\n", r.log2_lo, r.log2_hi,
                  r.cell, static_cast<unsigned long long>(r.count), r.normalized_mass, r.stderr_);
    out += buf;
  }
  return out;
}

}  // namespace critmat
