#ifndef ROTS_ROTS_HPP
#define ROTS_ROTS_HPP

#include "rots/embedding.hpp"
#include "rots/eval.hpp"
#include "rots/matrix.hpp"
#include "rots/pipeline.hpp"
#include "rots/similarity.hpp"
#include "rots/structure.hpp"
#include "rots/transport.hpp"
#include "rots/tree_io.hpp"
#include "rots/weighting.hpp"

#endif // ROTS_ROTS_HPP
