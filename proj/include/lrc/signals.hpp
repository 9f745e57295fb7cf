#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

namespace lrc {

inline constexpr double kPi = 3.14159265358979323846;

/// Wrap an angle into (-pi, pi].
double wrap_phase(double phase);

struct SineComponent {
  double omega = 0.0;      // rad/s, > 0
  double amplitude = 0.0;  // >= 0
  double phase = 0.0;      // rad, wrapped into (-pi, pi]
};

/// Sum of cosines a_j cos(w_j t + phi_j). Components are kept sorted by
/// frequency; frequencies must be positive and pairwise distinct.
class MultiSineSignal {
 public:
  MultiSineSignal() = default;
  explicit MultiSineSignal(std::vector<SineComponent> components);

  const std::vector<SineComponent>& components() const { return components_; }
  std::size_t size() const { return components_.size(); }
  bool empty() const { return components_.empty(); }

  std::vector<double> omegas() const;
  double max_omega() const;
  double operator()(double t) const;

 private:
  std::vector<SineComponent> components_;
};

/// Uniformly sampled real series: values[k] taken at t0 + k * tau.
struct SampledSeries {
  std::vector<double> values;
  double tau = 0.01;
  double t0 = 0.0;

  SampledSeries() = default;
  SampledSeries(std::vector<double> v, double step, double start);

  std::size_t size() const { return values.size(); }
  double time(std::size_t k) const { return t0 + static_cast<double>(k) * tau; }
};

SampledSeries sample(const MultiSineSignal& signal, std::size_t count, double tau, double t0 = 0.0);

struct CommonFrequencies {
  std::vector<double> omegas;
  MultiSineSignal u_signal;
  MultiSineSignal y_signal;
};

/// Finds the K DFT bins that are local spectral maxima of both series, ranked
/// by the smaller of the two magnitudes (ties to the lower frequency), and
/// reads amplitude and phase off the peak bins. Throws FewerThanKCommonPeaks.
CommonFrequencies extract_common_frequencies(const SampledSeries& u, const SampledSeries& y,
                                             std::size_t k);

/// Two-column CSV (time,value) with 15 significant digits.
void write_series_csv(std::ostream& out, const SampledSeries& series);

/// Reads the (time,value) format back; the time column must be uniform.
SampledSeries read_series_csv(std::istream& in);

}  // namespace lrc
