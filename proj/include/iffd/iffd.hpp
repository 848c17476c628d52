#pragma once

#include "iffd/banded.hpp"
#include "iffd/bench.hpp"
#include "iffd/dense.hpp"
#include "iffd/errors.hpp"
#include "iffd/galerkin.hpp"
#include "iffd/geometry.hpp"
#include "iffd/operator.hpp"
#include "iffd/quadrature.hpp"
#include "iffd/solver.hpp"
#include "iffd/spectral.hpp"
#include "iffd/spline.hpp"
#include "iffd/splitting.hpp"
#include "iffd/tensor.hpp"
#include "iffd/transforms.hpp"
#include "iffd/univariate.hpp"
