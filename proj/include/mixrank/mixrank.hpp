#pragma once

#include "mixrank/boundary.hpp"
#include "mixrank/cli.hpp"
#include "mixrank/em.hpp"
#include "mixrank/errors.hpp"
#include "mixrank/exactla/linalg.hpp"
#include "mixrank/exactla/matrix.hpp"
#include "mixrank/exactla/text_io.hpp"
#include "mixrank/families.hpp"
#include "mixrank/harness.hpp"
#include "mixrank/parallel.hpp"
#include "mixrank/random.hpp"
#include "mixrank/rank3cert/brackets.hpp"
#include "mixrank/rank3cert/factorization.hpp"
#include "mixrank/rank3cert/membership.hpp"
#include "mixrank/rank3cert/polygons.hpp"
