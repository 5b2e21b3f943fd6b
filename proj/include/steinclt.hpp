#pragma once

// Everything except the experiment runner, which also needs nlohmann/json
// (include "steinclt/experiment.hpp" for that).

#include "steinclt/bias.hpp"
#include "steinclt/bounds.hpp"
#include "steinclt/hermite.hpp"
#include "steinclt/sampler.hpp"
#include "steinclt/smoothing.hpp"
#include "steinclt/stein.hpp"
#include "steinclt/summand.hpp"
#include "steinclt/tensor.hpp"
#include "steinclt/test_function.hpp"
#include "steinclt/wasserstein.hpp"
