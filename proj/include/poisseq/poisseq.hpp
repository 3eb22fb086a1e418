#ifndef POISSEQ_POISSEQ_HPP
#define POISSEQ_POISSEQ_HPP

#include "poisseq/clustering.hpp"
#include "poisseq/core_data.hpp"
#include "poisseq/dissimilarity.hpp"
#include "poisseq/error.hpp"
#include "poisseq/parallel.hpp"
#include "poisseq/plda.hpp"
#include "poisseq/power_transform.hpp"
#include "poisseq/replicate.hpp"
#include "poisseq/serialization.hpp"
#include "poisseq/simulator.hpp"
#include "poisseq/size_factors.hpp"

#endif
