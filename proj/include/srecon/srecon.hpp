#pragma once

#include "srecon/common.hpp"
#include "srecon/combinations.hpp"
#include "srecon/haar.hpp"
#include "srecon/operators.hpp"
#include "srecon/core_recon.hpp"
#include "srecon/dore.hpp"
#include "srecon/matrix_analysis.hpp"
#include "srecon/model_selection.hpp"
#include "srecon/experiments.hpp"
