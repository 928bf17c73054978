#include "hornsim/sensing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hornsim {

double GaussianStream::u01() {
  // 53-bit mantissa, shifted into (0, 1] so log() below is always finite.
  const std::uint64_t x = eng_() >> 11;
  return (static_cast<double>(x) + 1.0) * 0x1p-53;
}

double GaussianStream::next() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = u01();
  const double u2 = u01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * M_PI * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view tag) {
  std::uint64_t h = 14695981039346656037ULL;  // FNV-1a 64
  for (unsigned char ch : tag) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  std::uint64_t z = master ^ h;
  z += 0x9E3779B97F4A7C15ULL;  // splitmix64 finalizer
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void PiecewiseLinear::validate() const {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("piecewise-linear table needs >= 2 matched knots");
  for (std::size_t i = 1; i < x.size(); ++i)
    if (!(x[i] > x[i - 1]))
      throw std::invalid_argument("piecewise-linear knots must be strictly increasing");
}

double PiecewiseLinear::operator()(double xi) const {
  if (xi <= x.front()) return y.front();
  if (xi >= x.back()) return y.back();
  const auto it = std::upper_bound(x.begin(), x.end(), xi);
  const std::size_t i = static_cast<std::size_t>(it - x.begin());
  const double w = (xi - x[i - 1]) / (x[i] - x[i - 1]);
  return y[i - 1] + w * (y[i] - y[i - 1]);
}

bool PiecewiseLinear::strictly_increasing_y() const {
  for (std::size_t i = 1; i < y.size(); ++i)
    if (!(y[i] > y[i - 1])) return false;
  return true;
}

FlexSensorModel FlexSensorModel::standard() {
  FlexSensorModel m;
  const int n = 31;
  const double d_max = 0.06;  // twice nominal full deflection, headroom past saturation
  for (int i = 0; i < n; ++i) {
    const double d = d_max * i / (n - 1);
    const double r = 800.0 * std::pow(d / 0.03, 1.5);
    m.loading.x.push_back(d);
    m.loading.y.push_back(r);
    m.unloading.x.push_back(d);
    m.unloading.y.push_back(1.15 * r);
  }
  m.loading.validate();
  m.unloading.validate();
  return m;
}

double FlexSensorModel::update(double deflection, double rate, double load_n,
                               double dt, GaussianStream* noise) {
  if (deflection < 0.0) throw std::invalid_argument("negative deflection");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (rate > kBranchRateEps)
    branch = Branch::Loading;
  else if (rate < -kBranchRateEps)
    branch = Branch::Unloading;

  // Exact update of cdot = creep_gain*load - c/tau with load held over dt.
  const double decay = std::exp(-dt / creep_decay_tau);
  creep = creep * decay + creep_gain * load_n * creep_decay_tau * (1.0 - decay);

  double r = (branch == Branch::Loading ? loading : unloading)(deflection) + creep;
  if (noise) r += noise_sigma * noise->next();
  return r;
}

double divider_voltage(double r_flex, const AdcConfig& adc) {
  if (r_flex < 0.0) throw std::invalid_argument("negative flex resistance");
  return adc.v_in * adc.r_fixed / (adc.r_fixed + r_flex);
}

double resistance_from_voltage(double v_measure, const AdcConfig& adc) {
  if (!(v_measure > 0.0))
    throw std::invalid_argument("non-positive divider voltage (open circuit)");
  return adc.r_fixed * (adc.v_in - v_measure) / v_measure;
}

int adc_sample(double v, const AdcConfig& adc) {
  if (v < 0.0) return 0;  // saturates at the rail, like the hardware
  // The bias keeps decimal rail values (3.3/0.002) from landing one code low
  // after double rounding.
  const int code = static_cast<int>(std::floor(v / adc.lsb() + 1e-9));
  return std::clamp(code, 0, adc.max_code());
}

double LowPassFilter::Section::step(double x) {
  const double y = b0 * x + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
  x2 = x1;
  x1 = x;
  y2 = y1;
  y1 = y;
  return y;
}

void LowPassFilter::Section::reset() { x1 = x2 = y1 = y2 = 0.0; }

double LowPassFilter::step(double x) {
  for (Section& s : sections) x = s.step(x);
  return x;
}

void LowPassFilter::reset() {
  for (Section& s : sections) s.reset();
}

namespace {
double section_mag(const LowPassFilter::Section& s, double w) {
  const double c1 = std::cos(w), s1 = std::sin(w);
  const double c2 = std::cos(2.0 * w), s2 = std::sin(2.0 * w);
  const double nr = s.b0 + s.b1 * c1 + s.b2 * c2;
  const double ni = -(s.b1 * s1 + s.b2 * s2);
  const double dr = 1.0 + s.a1 * c1 + s.a2 * c2;
  const double di = -(s.a1 * s1 + s.a2 * s2);
  return std::sqrt((nr * nr + ni * ni) / (dr * dr + di * di));
}
}  // namespace

double LowPassFilter::dc_gain() const {
  double g = 1.0;
  for (const Section& s : sections) g *= (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
  return g;
}

double LowPassFilter::magnitude(double f_hz) const {
  const double w = 2.0 * M_PI * f_hz / sample_rate_hz;
  double g = 1.0;
  for (const Section& s : sections) g *= section_mag(s, w);
  return g;
}

LowPassFilter design_lowpass(int order, double cutoff_hz, double sample_rate_hz) {
  if (order < 1) throw std::invalid_argument("filter order must be >= 1");
  if (!(cutoff_hz > 0.0)) throw std::invalid_argument("cutoff must be positive");
  if (!(cutoff_hz < 0.5 * sample_rate_hz))
    throw std::invalid_argument("cutoff must be below Nyquist");

  LowPassFilter f;
  f.order = order;
  f.cutoff_hz = cutoff_hz;
  f.sample_rate_hz = sample_rate_hz;

  const double wc = 2.0 * M_PI * cutoff_hz;
  const double T = 1.0 / sample_rate_hz;

  // Matched-z poles (z = e^{sT}) with numerator zeros pinned at z = -1, then
  // each section scaled to unit DC gain. Tracks the analog Butterworth
  // magnitude at both the cutoff and the stopband probe tighter than the
  // bilinear warp at this cutoff/rate ratio.
  const int pairs = order / 2;
  for (int k = 0; k < pairs; ++k) {
    const double ang = M_PI * (2.0 * k + 1.0) / (2.0 * order) + M_PI / 2.0;
    const double sr = wc * std::cos(ang);  // Re(s) < 0
    const double si = wc * std::sin(ang);
    const double r = std::exp(sr * T);
    LowPassFilter::Section sec;
    sec.a1 = -2.0 * r * std::cos(si * T);
    sec.a2 = r * r;
    // A single zero at z = -1 per pole pair; doubling it drags the stopband
    // probe outside its tolerance.
    const double den_dc = 1.0 + sec.a1 + sec.a2;
    sec.b0 = den_dc / 2.0;
    sec.b1 = sec.b0;
    sec.b2 = 0.0;
    f.sections.push_back(sec);
  }
  if (order % 2 == 1) {
    const double p = std::exp(-wc * T);
    LowPassFilter::Section sec;
    sec.a1 = -p;
    sec.a2 = 0.0;
    const double den_dc = 1.0 - p;
    sec.b0 = den_dc / 2.0;
    sec.b1 = sec.b0;
    sec.b2 = 0.0;
    f.sections.push_back(sec);
  }
  return f;
}

EventDetector::EventDetector(std::string horn_id, double on_threshold,
                             double off_threshold, double min_duration)
    : horn_id_(std::move(horn_id)),
      on_(on_threshold),
      off_(off_threshold),
      min_duration_(min_duration),
      last_t_(0.0) {
  if (!(on_ > off_) || !(off_ > 0.0))
    throw std::invalid_argument("need on_threshold > off_threshold > 0");
  if (min_duration_ < 0.0) throw std::invalid_argument("negative min_duration");
}

std::optional<ContactEvent> EventDetector::feed(double t, double filtered) {
  if (have_last_ && !(t > last_t_))
    throw std::invalid_argument("event detector times must be strictly increasing");
  last_t_ = t;
  have_last_ = true;

  if (!open_) {
    if (filtered >= on_) {
      open_ = true;
      onset_ = peak_t_ = t;
      peak_v_ = filtered;
    }
    return std::nullopt;
  }
  if (filtered > peak_v_) {
    peak_v_ = filtered;
    peak_t_ = t;
  }
  if (filtered < off_) {
    open_ = false;
    if (t - onset_ >= min_duration_)
      return ContactEvent{horn_id_, onset_, peak_t_, peak_v_, t};
  }
  return std::nullopt;
}

std::optional<ContactEvent> EventDetector::finish(double t) {
  if (!open_) return std::nullopt;
  open_ = false;
  if (t - onset_ >= min_duration_)
    return ContactEvent{horn_id_, onset_, peak_t_, peak_v_, t};
  return std::nullopt;
}

std::vector<ContactEvent> detect_contact_events(const std::vector<SensorSample>& samples,
                                                std::string_view horn_id,
                                                double on_threshold,
                                                double off_threshold,
                                                double min_duration) {
  EventDetector det(std::string(horn_id), on_threshold, off_threshold, min_duration);
  std::vector<ContactEvent> out;
  for (const SensorSample& s : samples)
    if (auto ev = det.feed(s.t, s.filtered)) out.push_back(*ev);
  if (!samples.empty())
    if (auto ev = det.finish(samples.back().t)) out.push_back(*ev);
  return out;
}

void CalibrationTable::validate() const {
  if (force_n.size() != resistance_ohm.size() || force_n.size() < 2)
    throw std::invalid_argument("calibration table needs >= 2 matched knots");
  for (std::size_t i = 1; i < force_n.size(); ++i)
    if (!(force_n[i] > force_n[i - 1]) || !(resistance_ohm[i] > resistance_ohm[i - 1]))
      throw std::invalid_argument("calibration table must be strictly increasing");
}

CalibrationTable CalibrationTable::from_branch(const PiecewiseLinear& branch,
                                               double k_per_horn, double f_max,
                                               int knots) {
  if (!(k_per_horn > 0.0)) throw std::invalid_argument("stiffness must be positive");
  if (knots < 2) throw std::invalid_argument("need >= 2 knots");
  CalibrationTable t;
  for (int i = 0; i < knots; ++i) {
    const double f = f_max * i / (knots - 1);
    t.force_n.push_back(f);
    t.resistance_ohm.push_back(branch(f / k_per_horn));
  }
  t.validate();
  return t;
}

ForceEstimate estimate_force(const CalibrationTable& table, double resistance_ohm) {
  ForceEstimate e;
  if (resistance_ohm <= table.resistance_ohm.front()) {
    e.force_n = table.force_n.front();
    e.extrapolated = resistance_ohm < table.resistance_ohm.front();
    return e;
  }
  if (resistance_ohm >= table.resistance_ohm.back()) {
    e.force_n = table.force_n.back();
    e.extrapolated = resistance_ohm > table.resistance_ohm.back();
    return e;
  }
  // Bisect the knot interval, then invert the linear segment.
  std::size_t lo = 0, hi = table.resistance_ohm.size() - 1;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    if (table.resistance_ohm[mid] <= resistance_ohm)
      lo = mid;
    else
      hi = mid;
  }
  const double r0 = table.resistance_ohm[lo], r1 = table.resistance_ohm[hi];
  const double w = (resistance_ohm - r0) / (r1 - r0);
  e.force_n = table.force_n[lo] + w * (table.force_n[hi] - table.force_n[lo]);
  return e;
}

SensorChannel::SensorChannel(std::string horn_id, const SensorChainParams& p,
                             std::uint64_t seed)
    : horn_id_(std::move(horn_id)),
      p_(p),
      model_(p.model),
      filter_(design_lowpass(p.filter_order, p.filter_cutoff_hz, p.adc.sample_rate)),
      detector_(horn_id_, p.on_threshold, p.off_threshold, p.min_event_duration),
      baseline_n_(std::max(1, static_cast<int>(std::lround(p.baseline_window *
                                                           p.adc.sample_rate)))) {
  if (model_.noise_sigma > 0.0)
    noise_.emplace(derive_seed(seed, horn_id_));
}

SensorSample SensorChannel::sample(double t, double deflection, double rate,
                                   double load_n) {
  const double dt = 1.0 / p_.adc.sample_rate;
  const double offset = model_.update(deflection, rate, load_n, dt,
                                      noise_ ? &*noise_ : nullptr);
  const double r_true = std::max(0.0, p_.neutral_resistance + offset);
  const int code = adc_sample(divider_voltage(r_true, p_.adc), p_.adc);
  const double r_rec = resistance_from_voltage(code * p_.adc.lsb(), p_.adc);

  SensorSample s;
  s.t = t;
  s.code = code;
  s.resistance = r_rec;

  if (seen_ < baseline_n_) {
    baseline_sum_ += r_rec;
    if (++seen_ == baseline_n_) baseline_ = baseline_sum_ / baseline_n_;
    // Baseline still settling: filtered channel stays quiet.
    s.filtered = 0.0;
    samples_.push_back(s);
    in_event_.push_back(0);
    return s;
  }

  s.filtered = filter_.step(s.resistance - baseline_);
  if (auto ev = detector_.feed(t, s.filtered)) events_.push_back(*ev);
  samples_.push_back(s);
  in_event_.push_back(detector_.open() ? 1 : 0);
  return s;
}

void SensorChannel::finish(double t) {
  if (auto ev = detector_.finish(t)) events_.push_back(*ev);
}

}  // namespace hornsim
