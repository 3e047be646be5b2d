#pragma once

#include <string>
#include <string_view>

namespace abcrm {

/// Porter (1980) suffix-stripping stemmer, following the reference C
/// implementation published by M. F. Porter. `word` must be lowercase
/// ASCII letters; words of length <= 2 are returned unchanged.
std::string porter_stem(std::string_view word);

}  // namespace abcrm
