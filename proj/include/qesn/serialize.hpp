#pragma once

#include "qesn/forecast.hpp"

#include <string>

namespace qesn {

/// JSON round trip of fitted models. Doubles are written in shortest
/// round-trip form, so a reloaded fit reproduces forecasts bit for bit.
std::string fit_to_json(const ModelFit& fit);
ModelFit fit_from_json(const std::string& text);

void save_fit(const ModelFit& fit, const std::string& path);
ModelFit load_fit(const std::string& path);

}  // namespace qesn
