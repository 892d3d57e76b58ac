#pragma once

#include "dcnb/analysis.hpp"
#include "dcnb/error.hpp"
#include "dcnb/extract.hpp"
#include "dcnb/metrics.hpp"
#include "dcnb/pcap.hpp"
#include "dcnb/pipeline.hpp"
#include "dcnb/sim.hpp"
#include "dcnb/synth.hpp"
#include "dcnb/topology.hpp"
#include "dcnb/trace.hpp"
#include "dcnb/version.hpp"
