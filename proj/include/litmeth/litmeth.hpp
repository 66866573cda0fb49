#pragma once

// Umbrella header for the whole pipeline library.

#include "litmeth/annotate.hpp"
#include "litmeth/checkpoint.hpp"
#include "litmeth/cluster.hpp"
#include "litmeth/config.hpp"
#include "litmeth/corpus.hpp"
#include "litmeth/error.hpp"
#include "litmeth/fetch.hpp"
#include "litmeth/metrics.hpp"
#include "litmeth/model.hpp"
#include "litmeth/ontology.hpp"
#include "litmeth/rng.hpp"
#include "litmeth/tensor.hpp"
#include "litmeth/text.hpp"
#include "litmeth/tokenizer.hpp"
#include "litmeth/train.hpp"
#include "litmeth/xml.hpp"
