#include "lrc/signals.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <mutex>
#include <istream>
#include <ostream>
#include <string>

#include "lrc/error.hpp"

namespace lrc {

double wrap_phase(double phase) {
  double w = std::remainder(phase, 2.0 * kPi);  // [-pi, pi]
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

MultiSineSignal::MultiSineSignal(std::vector<SineComponent> components)
    : components_(std::move(components)) {
  for (auto& c : components_) {
    require(std::isfinite(c.omega) && c.omega > 0.0, "signal frequencies must be positive");
    require(std::isfinite(c.amplitude) && c.amplitude >= 0.0,
            "signal amplitudes must be non-negative");
    require(std::isfinite(c.phase), "signal phase must be finite");
    c.phase = wrap_phase(c.phase);
  }
  std::sort(components_.begin(), components_.end(),
            [](const SineComponent& a, const SineComponent& b) { return a.omega < b.omega; });
  for (std::size_t i = 1; i < components_.size(); ++i) {
    require(components_[i].omega != components_[i - 1].omega,
            "signal frequencies must be distinct");
  }
}

std::vector<double> MultiSineSignal::omegas() const {
  std::vector<double> out;
  out.reserve(components_.size());
  for (const auto& c : components_) out.push_back(c.omega);
  return out;
}

double MultiSineSignal::max_omega() const {
  return components_.empty() ? 0.0 : components_.back().omega;
}

double MultiSineSignal::operator()(double t) const {
  double sum = 0.0;
  for (const auto& c : components_) sum += c.amplitude * std::cos(c.omega * t + c.phase);
  return sum;
}

SampledSeries::SampledSeries(std::vector<double> v, double step, double start)
    : values(std::move(v)), tau(step), t0(start) {
  require(!values.empty(), "sampled series must hold at least one value");
  require(tau > 0.0, "time step must be positive");
}

SampledSeries sample(const MultiSineSignal& signal, std::size_t count, double tau, double t0) {
  require(count >= 1, "sample count must be >= 1");
  require(tau > 0.0, "time step must be positive");
  std::vector<double> values(count);
  for (std::size_t k = 0; k < count; ++k) values[k] = signal(t0 + static_cast<double>(k) * tau);
  return SampledSeries(std::move(values), tau, t0);
}

namespace {

std::vector<std::complex<double>> real_dft(const std::vector<double>& x) {
  const int n = static_cast<int>(x.size());
  std::vector<double> in(x);
  std::vector<std::complex<double>> out(static_cast<std::size_t>(n / 2 + 1));
  // The FFTW planner is not reentrant; execution is.
  static std::mutex planner_mutex;
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex);
    plan = fftw_plan_dft_r2c_1d(n, in.data(), reinterpret_cast<fftw_complex*>(out.data()),
                                FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(planner_mutex);
    fftw_destroy_plan(plan);
  }
  return out;
}

std::vector<bool> local_maxima(const std::vector<double>& mag, std::size_t last_bin) {
  const double peak = *std::max_element(mag.begin() + 1, mag.begin() + static_cast<long>(last_bin) + 1);
  const double floor = 1e-6 * peak;
  std::vector<bool> is_max(mag.size(), false);
  for (std::size_t m = 1; m <= last_bin; ++m) {
    const double left = mag[m - 1];
    const double right = m + 1 < mag.size() ? mag[m + 1] : 0.0;
    is_max[m] = mag[m] > floor && mag[m] > left && mag[m] >= right;
  }
  return is_max;
}

}  // namespace

CommonFrequencies extract_common_frequencies(const SampledSeries& u, const SampledSeries& y,
                                             std::size_t k) {
  require(k >= 1, "K must be >= 1");
  require(u.size() == y.size(), "series lengths differ");
  require(u.tau == y.tau, "series time steps differ");
  const std::size_t n = u.size();
  if (n < 4) {
    throw Error(ErrorCode::FewerThanKCommonPeaks, "series too short for spectral analysis");
  }

  const auto uf = real_dft(u.values);
  const auto yf = real_dft(y.values);
  // Bins 1 .. ceil(n/2)-1 exclude DC and Nyquist.
  const std::size_t last_bin = (n - 1) / 2;
  std::vector<double> um(uf.size()), ym(yf.size());
  for (std::size_t m = 0; m < uf.size(); ++m) {
    um[m] = std::abs(uf[m]);
    ym[m] = std::abs(yf[m]);
  }
  const auto umax = local_maxima(um, last_bin);
  const auto ymax = local_maxima(ym, last_bin);

  std::vector<std::size_t> shared;
  for (std::size_t m = 1; m <= last_bin; ++m) {
    if (umax[m] && ymax[m]) shared.push_back(m);
  }
  if (shared.size() < k) {
    throw Error(ErrorCode::FewerThanKCommonPeaks,
                "found " + std::to_string(shared.size()) + " shared peaks, need " +
                    std::to_string(k));
  }
  std::stable_sort(shared.begin(), shared.end(), [&](std::size_t a, std::size_t b) {
    return std::min(um[a], ym[a]) > std::min(um[b], ym[b]);
  });
  shared.resize(k);
  std::sort(shared.begin(), shared.end());

  const double span = static_cast<double>(n) * u.tau;
  const double scale = 2.0 / static_cast<double>(n);
  CommonFrequencies out;
  std::vector<SineComponent> uc, yc;
  for (std::size_t m : shared) {
    const double omega = 2.0 * kPi * static_cast<double>(m) / span;
    out.omegas.push_back(omega);
    // X[m] = (n/2) a exp(i(phi + omega t0)) for a tone on bin m.
    uc.push_back({omega, scale * um[m], std::arg(uf[m]) - omega * u.t0});
    yc.push_back({omega, scale * ym[m], std::arg(yf[m]) - omega * y.t0});
  }
  out.u_signal = MultiSineSignal(std::move(uc));
  out.y_signal = MultiSineSignal(std::move(yc));
  return out;
}

void write_series_csv(std::ostream& out, const SampledSeries& series) {
  out << "time,value\n";
  char buf[64];
  for (std::size_t k = 0; k < series.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.15g,%.15g\n", series.time(k), series.values[k]);
    out << buf;
  }
}

SampledSeries read_series_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::InvalidArgument, "empty series file");
  std::vector<double> times, values;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw Error(ErrorCode::InvalidArgument, "series row without a comma: " + line);
    }
    try {
      times.push_back(std::stod(line.substr(0, comma)));
      values.push_back(std::stod(line.substr(comma + 1)));
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::InvalidArgument, "unparsable series row: " + line);
    }
  }
  require(times.size() >= 2, "series needs at least two rows");
  const double tau = times[1] - times[0];
  require(tau > 0.0, "series time must increase");
  for (std::size_t k = 1; k < times.size(); ++k) {
    const double expected = times[0] + static_cast<double>(k) * tau;
    require(std::abs(times[k] - expected) <= 1e-9 * std::max(1.0, std::abs(expected)),
            "series time column is not uniformly spaced");
  }
  return SampledSeries(std::move(values), tau, times[0]);
}

}  // namespace lrc
