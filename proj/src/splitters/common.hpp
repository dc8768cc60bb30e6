#pragma once

#include <vmor/linops.hpp>

#include <stdexcept>
#include <string>

namespace vmor::detail {

inline void require_identity_metric(const Metric &M, const char *who) {
    const auto *id = dynamic_cast<const ScaledIdentityMetric *>(&M);
    if (!id || id->scale() != 1.0)
        throw std::invalid_argument(std::string(who) + ": certificate requires the identity metric");
}

} // namespace vmor::detail
