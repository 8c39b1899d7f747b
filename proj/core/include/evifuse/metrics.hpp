#pragma once

#include <span>

namespace evifuse::metrics {

// Mean absolute error, in the units of the inputs.
double mae(std::span<const double> forecast, std::span<const double> actual);

// Mean absolute percentage error, in percent. Every actual must be positive.
double mape(std::span<const double> forecast, std::span<const double> actual);

}  // namespace evifuse::metrics
