#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace hornsim {

// Deterministic standard-normal stream: mt19937_64 plus explicit Box-Muller,
// so streams are reproducible across standard libraries.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : eng_(seed) {}
  double next();

 private:
  double u01();  // uniform in (0, 1]
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Stable sub-stream seeding: splitmix64 of the master seed xored with a tag hash.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag);

// Monotone piecewise-linear map with clamped extrapolation.
struct PiecewiseLinear {
  std::vector<double> x;
  std::vector<double> y;
  void validate() const;  // x strictly increasing, sizes match, >= 2 knots
  double operator()(double xi) const;
  bool strictly_increasing_y() const;
};

// Resistance offset of one flex-sensor channel as a function of horn deflection.
// Separate loading/unloading branches (both through the origin, unloading above
// loading) model hysteresis; a first-order creep state adds the slow residual
// offset that remains after load is removed.
struct FlexSensorModel {
  PiecewiseLinear loading;
  PiecewiseLinear unloading;
  double creep_gain = 1.0;        // ohm per N s of carried load
  double creep_decay_tau = 30.0;  // s
  double noise_sigma = 10.0;      // ohm, Gaussian per sample

  enum class Branch { Loading, Unloading };
  Branch branch = Branch::Loading;
  double creep = 0.0;  // ohm

  // Branch switches only when the deflection rate exceeds this magnitude,
  // otherwise the previous branch holds.
  static constexpr double kBranchRateEps = 1e-4;  // m/s

  // Advances creep (exact exponential update) and returns the resistance
  // offset in ohm. Rejects negative deflection. noise may be null.
  double update(double deflection, double rate, double load_n, double dt,
                GaussianStream* noise);

  // Power-law loading branch tabulated on 31 knots up to twice the nominal
  // full deflection; unloading is a fixed 1.15 ratio above it.
  static FlexSensorModel standard();
};

struct AdcConfig {
  int bits = 12;
  double full_scale = 4.096;   // V
  double sample_rate = 50.0;   // Hz
  double v_in = 3.3;           // V divider supply
  double r_fixed = 47000.0;    // ohm
  double lsb() const { return full_scale / static_cast<double>(1 << (bits - 1)); }
  int max_code() const { return (1 << (bits - 1)) - 1; }
};

// v = v_in * r_fixed / (r_fixed + r_flex)
double divider_voltage(double r_flex, const AdcConfig& adc);

// r_flex = r_fixed * (v_in - v) / v; rejects v <= 0 (open circuit).
double resistance_from_voltage(double v_measure, const AdcConfig& adc);

// floor(v / lsb), clamped to [0, 2^(bits-1) - 1]. The tiny bias inside the
// floor absorbs double rounding of decimal rail constants at code boundaries.
int adc_sample(double v, const AdcConfig& adc);

// Cascade of matched-z Butterworth sections, unit gain at DC. Pole mapping
// (z = e^{sT}) tracks the analog magnitude in the passband and near the
// stopband probe frequencies better than the bilinear warp does at this
// cutoff-to-rate ratio.
struct LowPassFilter {
  struct Section {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;
    double x1 = 0.0, x2 = 0.0, y1 = 0.0, y2 = 0.0;
    double step(double x);
    void reset();
  };
  int order = 2;
  double cutoff_hz = 0.8;
  double sample_rate_hz = 50.0;
  std::vector<Section> sections;

  double step(double x);
  void reset();
  double dc_gain() const;
  double magnitude(double f_hz) const;  // |H| at f_hz from the coefficients
};

// Throws on order < 1, cutoff <= 0, or cutoff >= sample_rate / 2.
LowPassFilter design_lowpass(int order, double cutoff_hz, double sample_rate_hz);

struct SensorSample {
  double t = 0.0;
  int code = 0;             // raw ADC code
  double resistance = 0.0;  // ohm, reconstructed from the quantized voltage
  double filtered = 0.0;    // ohm, baseline-subtracted and low-passed
};

struct ContactEvent {
  std::string horn_id;
  double onset_t = 0.0;
  double peak_t = 0.0;
  double peak_value = 0.0;  // ohm on the filtered channel
  double release_t = 0.0;
};

// Hysteresis threshold detector over the filtered channel. Opens at
// on_threshold, closes below off_threshold, drops events shorter than
// min_duration. Timestamps must be strictly increasing.
class EventDetector {
 public:
  EventDetector(std::string horn_id, double on_threshold, double off_threshold,
                double min_duration);
  std::optional<ContactEvent> feed(double t, double filtered);
  std::optional<ContactEvent> finish(double t);  // close a trailing open event
  bool open() const { return open_; }

 private:
  std::string horn_id_;
  double on_, off_, min_duration_;
  bool open_ = false;
  double onset_ = 0.0, peak_t_ = 0.0, peak_v_ = 0.0;
  double last_t_;
  bool have_last_ = false;
};

std::vector<ContactEvent> detect_contact_events(const std::vector<SensorSample>& samples,
                                                std::string_view horn_id,
                                                double on_threshold,
                                                double off_threshold,
                                                double min_duration);

// Monotone force-to-resistance pairs, both strictly increasing from zero.
struct CalibrationTable {
  std::vector<double> force_n;
  std::vector<double> resistance_ohm;
  void validate() const;
  // Samples a resistance branch at deflections F/k for an even force grid.
  static CalibrationTable from_branch(const PiecewiseLinear& branch, double k_per_horn,
                                      double f_max = 2.5, int knots = 11);
};

struct ForceEstimate {
  double force_n = 0.0;
  bool extrapolated = false;
};

// Inverts the table by bisection; clamps outside the calibrated range and
// flags the clamp.
ForceEstimate estimate_force(const CalibrationTable& table, double resistance_ohm);

// Full per-horn chain: flex model -> divider -> ADC -> reconstruction ->
// baseline subtraction -> low-pass -> event detector. The baseline is the mean
// reconstructed resistance over the initial rest window; the filter and
// detector only run after the baseline locks.
struct SensorChainParams {
  FlexSensorModel model = FlexSensorModel::standard();
  AdcConfig adc;
  double neutral_resistance = 25000.0;  // ohm, flat-sensor operating point
  int filter_order = 2;
  double filter_cutoff_hz = 0.8;
  double on_threshold = 40.0;   // ohm, about 5x the post-filter noise floor
  double off_threshold = 20.0;  // ohm
  double min_event_duration = 0.06;  // s
  double baseline_window = 0.5;      // s
};

class SensorChannel {
 public:
  SensorChannel(std::string horn_id, const SensorChainParams& p, std::uint64_t seed);

  SensorSample sample(double t, double deflection, double rate, double load_n);
  bool event_open() const { return detector_.open(); }
  const std::string& horn_id() const { return horn_id_; }
  const std::vector<SensorSample>& samples() const { return samples_; }
  const std::vector<std::uint8_t>& in_event() const { return in_event_; }
  const std::vector<ContactEvent>& events() const { return events_; }
  void finish(double t);
  double baseline() const { return baseline_; }

 private:
  std::string horn_id_;
  SensorChainParams p_;
  FlexSensorModel model_;
  LowPassFilter filter_;
  EventDetector detector_;
  std::optional<GaussianStream> noise_;
  int baseline_n_;
  int seen_ = 0;
  double baseline_sum_ = 0.0;
  double baseline_ = 0.0;
  std::vector<SensorSample> samples_;
  std::vector<std::uint8_t> in_event_;
  std::vector<ContactEvent> events_;
};

}  // namespace hornsim
