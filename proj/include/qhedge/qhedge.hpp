#ifndef QHEDGE_QHEDGE_HPP
#define QHEDGE_QHEDGE_HPP

// Umbrella header: quadratic hedging on finite filtration trees.

#include "qhedge/decompose.hpp"
#include "qhedge/errors.hpp"
#include "qhedge/io.hpp"
#include "qhedge/model.hpp"
#include "qhedge/moments.hpp"
#include "qhedge/oracle.hpp"
#include "qhedge/perturb.hpp"
#include "qhedge/process.hpp"
#include "qhedge/report.hpp"
#include "qhedge/scalar.hpp"
#include "qhedge/tree.hpp"

#endif  // QHEDGE_QHEDGE_HPP
