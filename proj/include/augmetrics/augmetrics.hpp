#pragma once

#include "augmetrics/ada.hpp"
#include "augmetrics/augment.hpp"
#include "augmetrics/distprotocol.hpp"
#include "augmetrics/error.hpp"
#include "augmetrics/evalstats.hpp"
#include "augmetrics/feature_file.hpp"
#include "augmetrics/frechet.hpp"
#include "augmetrics/image.hpp"
#include "augmetrics/manifest.hpp"
#include "augmetrics/parallel.hpp"
#include "augmetrics/png_io.hpp"
#include "augmetrics/rng.hpp"
#include "augmetrics/simmetrics.hpp"

namespace augmetrics {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace augmetrics
