#pragma once

// Pollinator puzzle: place the digits 0-9 once each into ten cells so that
// every petal constraint (cell_a op cell_b = target) holds.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "comfortsim/rng.hpp"

namespace comfortsim::pollinator {

inline constexpr int kCells = 10;

using Assignment = std::array<std::uint8_t, kCells>;

enum class Op { add, sub, mul, div };

char symbol(Op op);
std::optional<Op> parse_op(char c);

// Normalised fraction with positive denominator.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    Rational() = default;
    Rational(std::int64_t n, std::int64_t d = 1);

    std::string str() const;
    static Rational parse(std::string_view text);
    bool operator==(const Rational&) const = default;
};

struct Constraint {
    int cell_a = 0;
    int cell_b = 1;
    Op op = Op::add;
    Rational target;

    bool holds(int a, int b) const;
    bool operator==(const Constraint&) const = default;
};

struct Puzzle {
    std::vector<Constraint> constraints;
    std::optional<Assignment> solution;  // recorded by the generator

    // Throws std::invalid_argument for bad endpoints.
    void validate() const;
    bool satisfied_by(const Assignment& a) const;
};

// All satisfying permutations in lexicographic order.
std::vector<Assignment> solve(const Puzzle& puzzle);

// Stops after `limit` solutions.
std::size_t count_solutions(const Puzzle& puzzle, std::size_t limit);

// Ring edges (i, i+1 mod 10) first, then random chords; further random edges
// are added until the solution is unique. Throws std::runtime_error naming
// the seed if no unique instance is found within the attempt budget.
Puzzle generate(std::uint64_t seed, const std::vector<Op>& op_palette, int n_constraints);

struct PuzzleAnswer {
    std::map<int, int> filled;  // cell -> digit

    // Throws std::invalid_argument for bad cells/digits or repeated digits.
    void set(int cell, int digit);
    void validate() const;
};

struct Score {
    double completeness = 0.0;  // X, percent of the ten fields filled
    double accuracy = 0.0;      // Y, percent correct
    double combined = 0.0;      // Z = 0.4 X + 0.6 Y
};

enum class AccuracyBase { filled, all_cells };

Score score(const PuzzleAnswer& answer, const Assignment& solution,
            AccuracyBase base = AccuracyBase::filled);

// Text form:
//   pollinator v1
//   constraint <a> <op> <b> = <target>
//   solution <ten digits>        (optional)
std::string to_text(const Puzzle& puzzle, bool with_solution = true);
Puzzle puzzle_from_text(std::string_view text);

nlohmann::json to_json(const Puzzle& puzzle, bool with_solution);
PuzzleAnswer answer_from_json(const nlohmann::json& j);

}  // namespace comfortsim::pollinator
