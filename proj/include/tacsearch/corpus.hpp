#pragma once

#include <cstdint>
#include <string_view>

#include "tacsearch/env.hpp"

namespace tacsearch {

/// `2 * SUM (n + 1) I = n * (n + 1)`. Never part of a generated corpus.
inline constexpr std::string_view kRunningExample = "(= (* 2 (SUM (+ n 1) I)) (* n (+ n 1)))";

/// True on every instance with variables ranging over 0..max_value.
/// Formulas that cannot be evaluated count as false.
bool ground_valid(const Goal& g, const Signature& sig, std::uint64_t max_value = 5);

/// About `size` true theorems in library order: ring lemmas, ground facts,
/// definitional facts, implications, conjunctions, then inductive SUM facts.
Corpus generate_corpus(const Environment& env, std::size_t size = 200, std::uint64_t seed = 1);

}  // namespace tacsearch
