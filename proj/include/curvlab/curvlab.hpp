#pragma once

#include "curvlab/errors.hpp"
#include "curvlab/scalar.hpp"
#include "curvlab/polynomial.hpp"
#include "curvlab/qpoly.hpp"
#include "curvlab/exact_rank.hpp"
#include "curvlab/presentation.hpp"
#include "curvlab/spec_io.hpp"
#include "curvlab/hilbert.hpp"
#include "curvlab/graded_space.hpp"
#include "curvlab/oplab.hpp"
#include "curvlab/metricbasis.hpp"
#include "curvlab/fixtures.hpp"
#include "curvlab/report.hpp"
