#pragma once

// Everything in one include.

#include "seqpolicy/errors.hpp"
#include "seqpolicy/version.hpp"

#include "seqpolicy/numerics/cholesky.hpp"
#include "seqpolicy/numerics/json.hpp"
#include "seqpolicy/numerics/lu.hpp"
#include "seqpolicy/numerics/matrix.hpp"
#include "seqpolicy/numerics/random.hpp"

#include "seqpolicy/core/agent.hpp"
#include "seqpolicy/core/csv.hpp"
#include "seqpolicy/core/dataset.hpp"
#include "seqpolicy/core/features.hpp"
#include "seqpolicy/core/policy.hpp"
#include "seqpolicy/core/returns.hpp"

#include "seqpolicy/simulators/chain.hpp"
#include "seqpolicy/simulators/locf.hpp"
#include "seqpolicy/simulators/mrt.hpp"
#include "seqpolicy/simulators/recovery.hpp"
#include "seqpolicy/simulators/smart.hpp"

#include "seqpolicy/dtr_indirect/linear_q.hpp"
#include "seqpolicy/dtr_indirect/tabular_q.hpp"

#include "seqpolicy/dtr_direct/owl.hpp"
#include "seqpolicy/dtr_direct/softmax_search.hpp"
#include "seqpolicy/dtr_direct/value.hpp"
#include "seqpolicy/dtr_direct/vlearning.hpp"

#include "seqpolicy/bandits/actor_critic.hpp"
#include "seqpolicy/bandits/common.hpp"
#include "seqpolicy/bandits/linear.hpp"
#include "seqpolicy/bandits/nig.hpp"

#include "seqpolicy/harness/config.hpp"
#include "seqpolicy/harness/runner.hpp"
