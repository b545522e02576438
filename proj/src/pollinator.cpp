#include "comfortsim/pollinator.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace comfortsim::pollinator {

char symbol(Op op) {
    switch (op) {
        case Op::add: return '+';
        case Op::sub: return '-';
        case Op::mul: return '*';
        case Op::div: return '/';
    }
    return '+';
}

std::optional<Op> parse_op(char c) {
    switch (c) {
        case '+': return Op::add;
        case '-': return Op::sub;
        case '*':
        case 'x': return Op::mul;
        case '/': return Op::div;
        default: return std::nullopt;
    }
}

Rational::Rational(std::int64_t n, std::int64_t d) {
    if (d == 0) throw std::invalid_argument("zero denominator");
    if (d < 0) {
        n = -n;
        d = -d;
    }
    const std::int64_t g = std::gcd(n < 0 ? -n : n, d);
    num = g ? n / g : n;
    den = g ? d / g : d;
}

std::string Rational::str() const {
    return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
}

Rational Rational::parse(std::string_view text) {
    auto to_i64 = [&](std::string_view s) {
        std::int64_t v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
            throw std::invalid_argument("bad rational '" + std::string(text) + "'");
        }
        return v;
    };
    const auto slash = text.find('/');
    if (slash == std::string_view::npos) return Rational(to_i64(text));
    return Rational(to_i64(text.substr(0, slash)), to_i64(text.substr(slash + 1)));
}

bool Constraint::holds(int a, int b) const {
    const std::int64_t p = target.num;
    const std::int64_t q = target.den;
    switch (op) {
        case Op::add: return (a + b) * q == p;
        case Op::sub: return (a - b) * q == p;
        case Op::mul: return a * b * q == p;
        case Op::div: return b != 0 && a * q == p * b;
    }
    return false;
}

void Puzzle::validate() const {
    for (const auto& c : constraints) {
        if (c.cell_a < 0 || c.cell_a >= kCells || c.cell_b < 0 || c.cell_b >= kCells ||
            c.cell_a == c.cell_b) {
            throw std::invalid_argument("constraint endpoints must be distinct cells 0-9");
        }
    }
}

bool Puzzle::satisfied_by(const Assignment& a) const {
    return std::all_of(constraints.begin(), constraints.end(),
                       [&](const Constraint& c) { return c.holds(a[c.cell_a], a[c.cell_b]); });
}

namespace {

using Mask = std::uint16_t;
constexpr Mask kAllDigits = 0x3ff;

struct Link {
    int other;
    std::array<Mask, kCells> allowed;  // digits for `other` given this cell's digit
};

class Search {
public:
    explicit Search(const Puzzle& puzzle, std::size_t limit) : limit_(limit) {
        puzzle.validate();
        for (const auto& c : puzzle.constraints) {
            Link forward{c.cell_b, {}};
            Link backward{c.cell_a, {}};
            for (int a = 0; a < kCells; ++a) {
                for (int b = 0; b < kCells; ++b) {
                    if (a != b && c.holds(a, b)) {
                        forward.allowed[a] |= static_cast<Mask>(1u << b);
                        backward.allowed[b] |= static_cast<Mask>(1u << a);
                    }
                }
            }
            links_[c.cell_a].push_back(forward);
            links_[c.cell_b].push_back(backward);
        }
    }

    void run(std::vector<Assignment>* out) {
        out_ = out;
        std::array<Mask, kCells> domains;
        domains.fill(kAllDigits);
        // Unary pruning: a digit with no partner for some constraint is dead.
        for (int cell = 0; cell < kCells; ++cell) {
            for (const Link& l : links_[cell]) {
                for (int d = 0; d < kCells; ++d) {
                    if (l.allowed[d] == 0) domains[cell] &= static_cast<Mask>(~(1u << d));
                }
            }
        }
        Assignment current{};
        recurse(domains, 0, current);
    }

    std::size_t found() const { return found_; }

private:
    bool recurse(const std::array<Mask, kCells>& domains, Mask assigned, Assignment& current) {
        if (assigned == kAllDigits) {
            ++found_;
            if (out_) out_->push_back(current);
            return found_ < limit_;
        }
        int cell = -1;
        int best = kCells + 1;
        for (int i = 0; i < kCells; ++i) {
            if (assigned & (1u << i)) continue;
            const int size = std::popcount(domains[i]);
            if (size < best) {
                best = size;
                cell = i;
            }
        }
        if (best == 0) return true;

        for (int d = 0; d < kCells; ++d) {
            if (!(domains[cell] & (1u << d))) continue;
            std::array<Mask, kCells> next = domains;
            const Mask without = static_cast<Mask>(~(1u << d));
            bool dead = false;
            for (int i = 0; i < kCells && !dead; ++i) {
                if (i == cell || (assigned & (1u << i))) continue;
                next[i] &= without;
                dead = next[i] == 0;
            }
            for (const Link& l : links_[cell]) {
                if (dead) break;
                if (assigned & (1u << l.other)) {
                    dead = !(l.allowed[d] & (1u << current[l.other]));
                } else {
                    next[l.other] &= l.allowed[d];
                    dead = next[l.other] == 0;
                }
            }
            if (dead) continue;
            current[cell] = static_cast<std::uint8_t>(d);
            next[cell] = static_cast<Mask>(1u << d);
            if (!recurse(next, static_cast<Mask>(assigned | (1u << cell)), current)) return false;
        }
        return true;
    }

    std::array<std::vector<Link>, kCells> links_;
    std::size_t limit_;
    std::size_t found_ = 0;
    std::vector<Assignment>* out_ = nullptr;
};

}  // namespace

std::vector<Assignment> solve(const Puzzle& puzzle) {
    std::vector<Assignment> out;
    Search search(puzzle, SIZE_MAX);
    search.run(&out);
    if (!std::is_sorted(out.begin(), out.end())) std::sort(out.begin(), out.end());
    return out;
}

std::size_t count_solutions(const Puzzle& puzzle, std::size_t limit) {
    Search search(puzzle, limit);
    search.run(nullptr);
    return search.found();
}

Puzzle generate(std::uint64_t seed, const std::vector<Op>& op_palette, int n_constraints) {
    constexpr int kMaxEdges = kCells * (kCells - 1) / 2;
    if (n_constraints < 9 || n_constraints > kMaxEdges) {
        throw std::invalid_argument("n_constraints must lie in [9, 45]");
    }
    if (op_palette.empty()) throw std::invalid_argument("empty operator palette");

    Rng rng(seed, 0x9011);
    constexpr int kAttempts = 64;
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
        Assignment secret{};
        std::iota(secret.begin(), secret.end(), std::uint8_t{0});
        for (int i = kCells - 1; i > 0; --i) {
            std::swap(secret[i], secret[rng.below(static_cast<std::uint64_t>(i) + 1)]);
        }

        std::vector<std::pair<int, int>> edges;
        for (int i = 0; i < kCells; ++i) edges.emplace_back(i, (i + 1) % kCells);
        std::vector<std::pair<int, int>> chords;
        for (int a = 0; a < kCells; ++a) {
            for (int b = a + 2; b < kCells; ++b) {
                if (!(a == 0 && b == kCells - 1)) chords.emplace_back(a, b);
            }
        }
        for (std::size_t i = chords.size(); i > 1; --i) {
            std::swap(chords[i - 1], chords[rng.below(i)]);
        }
        edges.insert(edges.end(), chords.begin(), chords.end());

        auto make = [&](std::pair<int, int> e) {
            auto [a, b] = e;
            if (rng.bernoulli(0.5)) std::swap(a, b);
            const Op op = op_palette[rng.below(op_palette.size())];
            if (op == Op::div && secret[b] == 0) std::swap(a, b);
            const std::int64_t x = secret[a];
            const std::int64_t y = secret[b];
            Rational target;
            switch (op) {
                case Op::add: target = Rational(x + y); break;
                case Op::sub: target = Rational(x - y); break;
                case Op::mul: target = Rational(x * y); break;
                case Op::div: target = Rational(x, y); break;
            }
            return Constraint{a, b, op, target};
        };

        Puzzle p;
        std::size_t next = 0;
        while (static_cast<int>(next) < n_constraints) p.constraints.push_back(make(edges[next++]));
        std::size_t count = count_solutions(p, 2);
        while (count > 1 && next < edges.size()) {
            p.constraints.push_back(make(edges[next++]));
            count = count_solutions(p, 2);
        }
        if (count == 1) {
            p.solution = secret;
            return p;
        }
    }
    throw std::runtime_error("no unique puzzle found for seed " + std::to_string(seed));
}

void PuzzleAnswer::set(int cell, int digit) {
    if (cell < 0 || cell >= kCells || digit < 0 || digit > 9) {
        throw std::invalid_argument("cell must be 0-9 and digit 0-9");
    }
    for (const auto& [c, d] : filled) {
        if (c != cell && d == digit) {
            throw std::invalid_argument("digit " + std::to_string(digit) + " already placed");
        }
    }
    filled[cell] = digit;
}

void PuzzleAnswer::validate() const {
    PuzzleAnswer copy;
    for (const auto& [c, d] : filled) copy.set(c, d);
}

Score score(const PuzzleAnswer& answer, const Assignment& solution, AccuracyBase base) {
    answer.validate();
    Score s;
    const int filled = static_cast<int>(answer.filled.size());
    int correct = 0;
    for (const auto& [c, d] : answer.filled) {
        if (solution[static_cast<std::size_t>(c)] == d) ++correct;
    }
    s.completeness = 100.0 * filled / kCells;
    if (base == AccuracyBase::all_cells) {
        s.accuracy = 100.0 * correct / kCells;
    } else {
        s.accuracy = filled > 0 ? 100.0 * correct / filled : 0.0;
    }
    s.combined = 0.4 * s.completeness + 0.6 * s.accuracy;
    return s;
}

std::string to_text(const Puzzle& puzzle, bool with_solution) {
    std::ostringstream out;
    out << "pollinator v1\n";
    for (const auto& c : puzzle.constraints) {
        out << "constraint " << c.cell_a << ' ' << symbol(c.op) << ' ' << c.cell_b << " = "
            << c.target.str() << '\n';
    }
    if (with_solution && puzzle.solution) {
        out << "solution ";
        for (auto d : *puzzle.solution) out << static_cast<int>(d);
        out << '\n';
    }
    return out.str();
}

Puzzle puzzle_from_text(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || line != "pollinator v1") {
        throw std::invalid_argument("not a pollinator puzzle document");
    }
    Puzzle p;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string kind;
        ls >> kind;
        if (kind == "constraint") {
            Constraint c;
            std::string op, eq, target;
            if (!(ls >> c.cell_a >> op >> c.cell_b >> eq >> target) || op.size() != 1 || eq != "=") {
                throw std::invalid_argument("bad constraint line: " + line);
            }
            const auto parsed = parse_op(op[0]);
            if (!parsed) throw std::invalid_argument("unknown operator in: " + line);
            c.op = *parsed;
            c.target = Rational::parse(target);
            p.constraints.push_back(c);
        } else if (kind == "solution") {
            std::string digits;
            ls >> digits;
            if (digits.size() != kCells) throw std::invalid_argument("solution needs ten digits");
            Assignment a{};
            for (int i = 0; i < kCells; ++i) {
                if (digits[i] < '0' || digits[i] > '9') throw std::invalid_argument("bad solution digit");
                a[i] = static_cast<std::uint8_t>(digits[i] - '0');
            }
            p.solution = a;
        } else {
            throw std::invalid_argument("unknown line: " + line);
        }
    }
    p.validate();
    return p;
}

nlohmann::json to_json(const Puzzle& puzzle, bool with_solution) {
    nlohmann::json j;
    j["cells"] = kCells;
    j["constraints"] = nlohmann::json::array();
    for (const auto& c : puzzle.constraints) {
        j["constraints"].push_back({{"a", c.cell_a},
                                    {"b", c.cell_b},
                                    {"op", std::string(1, symbol(c.op))},
                                    {"target", c.target.str()}});
    }
    if (with_solution && puzzle.solution) {
        j["solution"] = std::vector<int>(puzzle.solution->begin(), puzzle.solution->end());
    }
    return j;
}

PuzzleAnswer answer_from_json(const nlohmann::json& j) {
    PuzzleAnswer a;
    if (!j.is_object()) throw std::invalid_argument("filled must be an object");
    for (const auto& [cell, digit] : j.items()) {
        int c = 0;
        const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), c);
        if (ec != std::errc{} || ptr != cell.data() + cell.size() || !digit.is_number_integer()) {
            throw std::invalid_argument("filled maps cell index strings to digits");
        }
        a.set(c, digit.get<int>());
    }
    return a;
}

}  // namespace comfortsim::pollinator
