#pragma once

#include "pgbias/diagnostics.hpp"
#include "pgbias/dynamics.hpp"
#include "pgbias/fields.hpp"
#include "pgbias/gallery.hpp"
#include "pgbias/mdp.hpp"
#include "pgbias/mdp_io.hpp"
#include "pgbias/policy.hpp"
#include "pgbias/report_json.hpp"
#include "pgbias/sampling.hpp"
#include "pgbias/solvers.hpp"
