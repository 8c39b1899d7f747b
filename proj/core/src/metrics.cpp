#include "evifuse/metrics.hpp"

#include <cmath>

#include "evifuse/errors.hpp"

namespace evifuse::metrics {

namespace {

void check_lengths(std::span<const double> forecast, std::span<const double> actual) {
  if (forecast.size() != actual.size()) throw InputError("forecast and actual differ in length");
  if (forecast.empty()) throw InputError("cannot score an empty series");
}

}  // namespace

double mae(std::span<const double> forecast, std::span<const double> actual) {
  check_lengths(forecast, actual);
  double sum = 0.0;
  for (std::size_t i = 0; i < forecast.size(); ++i) sum += std::abs(forecast[i] - actual[i]);
  return sum / static_cast<double>(forecast.size());
}

double mape(std::span<const double> forecast, std::span<const double> actual) {
  check_lengths(forecast, actual);
  double sum = 0.0;
  for (std::size_t i = 0; i < forecast.size(); ++i) {
    if (!(actual[i] > 0.0)) throw InputError("MAPE is undefined for a non-positive actual value");
    sum += std::abs(forecast[i] - actual[i]) / actual[i];
  }
  return 100.0 * sum / static_cast<double>(forecast.size());
}

}  // namespace evifuse::metrics
