#pragma once

#include "ucsdp/benders.hpp"
#include "ucsdp/case_model.hpp"
#include "ucsdp/errors.hpp"
#include "ucsdp/fixtures.hpp"
#include "ucsdp/master.hpp"
#include "ucsdp/milp.hpp"
#include "ucsdp/oracle.hpp"
#include "ucsdp/rank_reduction.hpp"
#include "ucsdp/report.hpp"
#include "ucsdp/sdp_assembly.hpp"
#include "ucsdp/sdp_solver.hpp"
#include "ucsdp/subproblem.hpp"
