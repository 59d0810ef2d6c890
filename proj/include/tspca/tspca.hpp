#pragma once

#include "tspca/asymcov.hpp"
#include "tspca/bootstrap.hpp"
#include "tspca/dgp.hpp"
#include "tspca/eigensystem.hpp"
#include "tspca/error.hpp"
#include "tspca/experiments.hpp"
#include "tspca/inference.hpp"
#include "tspca/model.hpp"
#include "tspca/series.hpp"
#include "tspca/spectral.hpp"
