#pragma once

// Scalar width of the engine. The default build runs on 32-bit floats;
// defining VSUM_REAL64 (the gradient-check build) switches the whole core
// to doubles. The two builds live in distinct inline namespaces so that a
// single binary can link both without symbol clashes.

#ifdef VSUM_REAL64
#define VSUM_PREC_NS f64
#else
#define VSUM_PREC_NS f32
#endif

#define VSUM_NS_BEGIN \
    namespace vsum {  \
    inline namespace VSUM_PREC_NS {
#define VSUM_NS_END \
    }               \
    }

VSUM_NS_BEGIN

#ifdef VSUM_REAL64
using Real = double;
#else
using Real = float;
#endif

VSUM_NS_END
