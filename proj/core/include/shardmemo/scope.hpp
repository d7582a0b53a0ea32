#pragma once

#include <optional>

#include "shardmemo/types.hpp"

namespace shardmemo {

/// True iff every constraint of `pred` holds for (key, family). A missing
/// family means the metadata has no family dimension (Tier A entries), in
/// which case the family constraint is vacuous.
bool scope_eval(const ScopePredicate& pred, const ScopeKey& key,
                std::optional<Family> family = std::nullopt);

}  // namespace shardmemo
