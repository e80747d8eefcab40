#pragma once

#include "mlra/error.hpp"
#include "mlra/bit_matrix.hpp"
#include "mlra/linalg.hpp"
#include "mlra/protocol_params.hpp"
#include "mlra/masks.hpp"
#include "mlra/protocols.hpp"
#include "mlra/solver.hpp"
#include "mlra/tensor.hpp"
#include "mlra/boolean.hpp"
#include "mlra/structural.hpp"
#include "mlra/io.hpp"
#include "mlra/harness.hpp"
