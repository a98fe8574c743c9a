#pragma once

#include "ctaf/common.hpp"
#include "ctaf/rng.hpp"
#include "ctaf/metar.hpp"
#include "ctaf/airspace.hpp"
#include "ctaf/transcript.hpp"
#include "ctaf/scenario.hpp"
#include "ctaf/scenario_gen.hpp"
#include "ctaf/records.hpp"
#include "ctaf/llm_client.hpp"
#include "ctaf/llm_http.hpp"
#include "ctaf/llm_mock.hpp"
#include "ctaf/llm_eval.hpp"
#include "ctaf/metrics.hpp"
#include "ctaf/report.hpp"
#include "ctaf/wav.hpp"
#include "ctaf/ablations.hpp"
#include "ctaf/config.hpp"
#include "ctaf/cli.hpp"
