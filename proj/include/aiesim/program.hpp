/*
 * Copyright 2026 The aiesim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/**
 * @file program.hpp
 * @brief The per-element operation schedule of the variance stage.
 *
 * One element costs 36 logical operations: 24 run on the 8-lane vector unit
 * and 12 are per-lane scalar work (lane moves, status checks, saturation
 * counting). Graph variants partition this schedule across kernels; values
 * crossing a kernel boundary travel on edges as named slots.
 *
 * ```
 *  v_in z_in ──► load ─► m = theta + (v-theta)E ─► s2 = v c1 + c2
 *            ─► psi = s2/m^2 (clamped) ─► r = 2/psi ─► b2 ─► a = m/(1+b2)
 *            ─► out = a (sqrt(b2) + z)^2
 * ```
 */

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "aiesim/common.hpp"
#include "aiesim/qe.hpp"

namespace aiesim {

enum class Slot : std::uint8_t {
    VIn, ZIn, V, Z, T0, T1, M, T2, S2, M2, Psi, R, RM1, SR, SRM1, P, B2, OPB, A, SB, W, W2, Res, Out,
    Status,
    Opaque,  ///< untyped payload word in hand-written graphs
    Count
};
inline constexpr std::size_t kSlotCount = static_cast<std::size_t>(Slot::Count);

inline constexpr std::array<std::string_view, kSlotCount> kSlotNames = {
    "v_in", "z_in", "v", "z", "t0", "t1", "m", "t2", "s2", "m2", "psi", "r", "rm1", "sr", "srm1",
    "p", "b2", "opb", "a", "sb", "w", "w2", "res", "out", "status", "opaque"};

inline std::string_view slot_name(Slot s) { return kSlotNames[static_cast<std::size_t>(s)]; }

inline std::optional<Slot> slot_from_name(std::string_view n) {
    for (std::size_t i = 0; i < kSlotCount; ++i) {
        if (kSlotNames[i] == n) return static_cast<Slot>(i);
    }
    return std::nullopt;
}

/// Per-lane status bits accumulated by the check operations.
enum StatusBit : std::uint32_t {
    kPadding = 1u << 0,
    kBadInput = 1u << 1,
    kDegenerateM = 1u << 2,
    kDegenerateS2 = 1u << 3,
    kDegeneratePsi = 1u << 4,
    kSaturated = 1u << 5,
    kRangeError = 1u << 6,
    kNonFinite = 1u << 7,
    kNegative = 1u << 8,
};
inline constexpr std::uint32_t kFatalStatus =
    kBadInput | kDegenerateM | kDegenerateS2 | kDegeneratePsi | kRangeError | kNonFinite | kNegative;

enum class OpCode : std::uint8_t {
    // vector
    Add, Sub, Mul, Div, Min, Sqrt, FlagNotPositive, FlagGreater,
    // scalar
    Move, MarkPadding, CheckInput, CountSaturated, FlagNegative, FlagNonFinite,
};

enum class Const : std::uint8_t { None, Theta, E, C1, C2, PsiC, One, Two };

struct Operand {
    Slot slot = Slot::Count;
    Const constant = Const::None;
    bool is_const() const { return constant != Const::None; }
};

inline constexpr Operand S(Slot s) { return {s, Const::None}; }
inline constexpr Operand K(Const k) { return {Slot::Count, k}; }
inline constexpr Operand kNone{};

struct Op {
    std::string_view name;
    OpCode code;
    bool vector;
    Slot dst;           ///< Slot::Count when the op only touches status
    Operand a, b;
    std::uint32_t flag;  ///< status bit written by check ops

    int issues() const { return code == OpCode::Div ? kDivIssues : 1; }
    bool writes_status() const {
        switch (code) {
            case OpCode::FlagNotPositive: case OpCode::FlagGreater: case OpCode::MarkPadding:
            case OpCode::CheckInput: case OpCode::FlagNegative: case OpCode::FlagNonFinite:
                return true;
            default:
                return false;
        }
    }
    bool reads_status() const { return writes_status() || code == OpCode::CountSaturated; }
};

// clang-format off
inline constexpr std::array<Op, kOpsPerElement> kProgram = {{
    {"load_v",      OpCode::Move,            false, Slot::V,     S(Slot::VIn), kNone, 0},
    {"load_z",      OpCode::Move,            false, Slot::Z,     S(Slot::ZIn), kNone, 0},
    {"mark_pad",    OpCode::MarkPadding,     false, Slot::Count, kNone, kNone, kPadding},
    {"check_in",    OpCode::CheckInput,      false, Slot::Count, S(Slot::V), S(Slot::Z), kBadInput},
    {"sub_t0",      OpCode::Sub,             true,  Slot::T0,    S(Slot::V), K(Const::Theta), 0},
    {"mul_t1",      OpCode::Mul,             true,  Slot::T1,    S(Slot::T0), K(Const::E), 0},
    {"add_m",       OpCode::Add,             true,  Slot::M,     K(Const::Theta), S(Slot::T1), 0},
    {"flag_m",      OpCode::FlagNotPositive, true,  Slot::Count, S(Slot::M), kNone, kDegenerateM},
    {"mul_t2",      OpCode::Mul,             true,  Slot::T2,    S(Slot::V), K(Const::C1), 0},
    {"add_s2",      OpCode::Add,             true,  Slot::S2,    S(Slot::T2), K(Const::C2), 0},
    {"flag_s2",     OpCode::FlagNotPositive, true,  Slot::Count, S(Slot::S2), kNone, kDegenerateS2},
    {"mul_m2",      OpCode::Mul,             true,  Slot::M2,    S(Slot::M), S(Slot::M), 0},
    {"div_psi",     OpCode::Div,             true,  Slot::Psi,   S(Slot::S2), S(Slot::M2), 0},
    {"flag_psi",    OpCode::FlagNotPositive, true,  Slot::Count, S(Slot::Psi), kNone, kDegeneratePsi},
    {"flag_sat",    OpCode::FlagGreater,     true,  Slot::Count, S(Slot::Psi), K(Const::PsiC), kSaturated},
    {"count_sat",   OpCode::CountSaturated,  false, Slot::Count, kNone, kNone, 0},
    {"clamp_psi",   OpCode::Min,             true,  Slot::Psi,   S(Slot::Psi), K(Const::PsiC), 0},
    {"div_r",       OpCode::Div,             true,  Slot::R,     K(Const::Two), S(Slot::Psi), 0},
    {"sub_rm1",     OpCode::Sub,             true,  Slot::RM1,   S(Slot::R), K(Const::One), 0},
    {"check_rm1",   OpCode::FlagNegative,    false, Slot::Count, S(Slot::RM1), kNone, kRangeError},
    {"sqrt_r",      OpCode::Sqrt,            true,  Slot::SR,    S(Slot::R), kNone, 0},
    {"sqrt_rm1",    OpCode::Sqrt,            true,  Slot::SRM1,  S(Slot::RM1), kNone, 0},
    {"mul_p",       OpCode::Mul,             true,  Slot::P,     S(Slot::SR), S(Slot::SRM1), 0},
    {"add_b2",      OpCode::Add,             true,  Slot::B2,    S(Slot::RM1), S(Slot::P), 0},
    {"check_b2",    OpCode::FlagNegative,    false, Slot::Count, S(Slot::B2), kNone, kRangeError},
    {"add_opb",     OpCode::Add,             true,  Slot::OPB,   S(Slot::B2), K(Const::One), 0},
    {"check_opb",   OpCode::FlagNonFinite,   false, Slot::Count, S(Slot::OPB), kNone, kRangeError},
    {"div_a",       OpCode::Div,             true,  Slot::A,     S(Slot::M), S(Slot::OPB), 0},
    {"sqrt_sb",     OpCode::Sqrt,            true,  Slot::SB,    S(Slot::B2), kNone, 0},
    {"add_w",       OpCode::Add,             true,  Slot::W,     S(Slot::SB), S(Slot::Z), 0},
    {"mul_w2",      OpCode::Mul,             true,  Slot::W2,    S(Slot::W), S(Slot::W), 0},
    {"mul_res",     OpCode::Mul,             true,  Slot::Res,   S(Slot::A), S(Slot::W2), 0},
    {"check_fin",   OpCode::FlagNonFinite,   false, Slot::Count, S(Slot::Res), kNone, kNonFinite},
    {"check_sign",  OpCode::FlagNegative,    false, Slot::Count, S(Slot::Res), kNone, kNegative},
    {"store_out",   OpCode::Move,            false, Slot::Out,   S(Slot::Res), kNone, 0},
    {"store_status",OpCode::Move,            false, Slot::Status,S(Slot::Status), kNone, 0},
}};
// clang-format on

inline constexpr int program_vector_ops() {
    int n = 0;
    for (const auto& op : kProgram) n += op.vector ? 1 : 0;
    return n;
}
static_assert(program_vector_ops() == kVectorOpsPerElement);
static_assert(kOpsPerElement - program_vector_ops() == kScalarOpsPerElement);

/// Slots entering and leaving the whole schedule. Status never leaves the
/// array: store_status writes it to the tile's trace buffer.
inline constexpr std::array<Slot, 2> kProgramInputs = {Slot::VIn, Slot::ZIn};
inline constexpr std::array<Slot, 1> kProgramOutputs = {Slot::Out};

/// Slots read by @p op (status included).
inline std::vector<Slot> op_reads(const Op& op) {
    std::vector<Slot> r;
    if (!op.a.is_const() && op.a.slot != Slot::Count) r.push_back(op.a.slot);
    if (!op.b.is_const() && op.b.slot != Slot::Count && op.b.slot != op.a.slot) r.push_back(op.b.slot);
    if (op.reads_status() && op.code != OpCode::MarkPadding) r.push_back(Slot::Status);
    return r;
}

/// Slots written by @p op.
inline std::vector<Slot> op_writes(const Op& op) {
    std::vector<Slot> w;
    if (op.dst != Slot::Count) w.push_back(op.dst);
    if (op.writes_status()) w.push_back(Slot::Status);
    return w;
}

/// Values live across the boundary just before op index @p cut: defined
/// earlier (or a program input) and read at or after @p cut before being
/// overwritten, or a program output not rewritten later.
inline std::vector<Slot> live_across(std::size_t cut) {
    std::array<bool, kSlotCount> defined{};
    for (Slot s : kProgramInputs) defined[static_cast<std::size_t>(s)] = true;
    for (std::size_t i = 0; i < cut && i < kProgram.size(); ++i) {
        for (Slot s : op_writes(kProgram[i])) defined[static_cast<std::size_t>(s)] = true;
    }
    std::vector<Slot> live;
    for (std::size_t si = 0; si < kSlotCount; ++si) {
        if (!defined[si]) continue;
        const Slot s = static_cast<Slot>(si);
        bool needed = std::find(kProgramOutputs.begin(), kProgramOutputs.end(), s) != kProgramOutputs.end();
        for (std::size_t j = cut; j < kProgram.size(); ++j) {
            const auto reads = op_reads(kProgram[j]);
            if (std::find(reads.begin(), reads.end(), s) != reads.end()) { needed = true; break; }
            const auto writes = op_writes(kProgram[j]);
            if (std::find(writes.begin(), writes.end(), s) != writes.end()) { needed = false; break; }
        }
        if (needed) live.push_back(s);
    }
    return live;
}

// ---------------------------------------------------------------------------
// Register file and interpreter
// ---------------------------------------------------------------------------

/// Local storage of one kernel invocation over one 8-lane batch.
struct RegFile {
    std::array<Lane8, kSlotCount> vals{};
    std::array<std::uint32_t, kLanes> status{};
    std::uint32_t present = 0;  ///< bit per slot
    int valid_lanes = kLanes;
    std::uint64_t saturated = 0;

    bool has(Slot s) const { return (present >> static_cast<unsigned>(s)) & 1u; }
    void set_present(Slot s) { present |= 1u << static_cast<unsigned>(s); }

    const Lane8& get(Slot s) const {
        if (!has(s)) {
            throw std::logic_error("slot '" + std::string(slot_name(s)) + "' was not delivered to this kernel");
        }
        return vals[static_cast<std::size_t>(s)];
    }
    void put(Slot s, const Lane8& l) {
        vals[static_cast<std::size_t>(s)] = l;
        set_present(s);
    }
    /// Copies @p slots (including status) from @p src.
    void receive(const RegFile& src, std::span<const Slot> slots) {
        for (Slot s : slots) {
            if (s == Slot::Opaque) continue;
            if (!src.has(s)) {
                throw std::logic_error("edge carries undefined slot '" + std::string(slot_name(s)) + "'");
            }
            if (s == Slot::Status) status = src.status;
            vals[static_cast<std::size_t>(s)] = src.vals[static_cast<std::size_t>(s)];
            set_present(s);
        }
        valid_lanes = src.valid_lanes;
    }
};

inline float const_value(Const k, const QEConstants& c) {
    switch (k) {
        case Const::Theta: return c.theta;
        case Const::E: return c.E;
        case Const::C1: return c.c1;
        case Const::C2: return c.c2;
        case Const::PsiC: return c.psi_c;
        case Const::One: return 1.0f;
        case Const::Two: return 2.0f;
        case Const::None: break;
    }
    return 0.0f;
}

inline Lane8 operand_value(const Operand& o, const RegFile& rf, const QEConstants& c) {
    if (o.is_const()) return Lane8::broadcast(const_value(o.constant, c));
    return rf.get(o.slot);
}

/// Executes one schedule entry over all 8 lanes of @p rf.
inline void execute_op(const Op& op, RegFile& rf, const QEConstants& c) {
    auto flag_where = [&](auto pred) {
        if (!rf.has(Slot::Status)) rf.get(Slot::Status);  // throws
        for (int i = 0; i < kLanes; ++i) {
            if (pred(i)) rf.status[static_cast<std::size_t>(i)] |= op.flag;
        }
    };
    switch (op.code) {
        case OpCode::Add: rf.put(op.dst, vec_add(operand_value(op.a, rf, c), operand_value(op.b, rf, c))); break;
        case OpCode::Sub: rf.put(op.dst, vec_sub(operand_value(op.a, rf, c), operand_value(op.b, rf, c))); break;
        case OpCode::Mul: rf.put(op.dst, vec_mul(operand_value(op.a, rf, c), operand_value(op.b, rf, c))); break;
        case OpCode::Div: rf.put(op.dst, vec_div(operand_value(op.a, rf, c), operand_value(op.b, rf, c))); break;
        case OpCode::Min: rf.put(op.dst, vec_min(operand_value(op.a, rf, c), operand_value(op.b, rf, c))); break;
        case OpCode::Sqrt: rf.put(op.dst, vec_sqrt(operand_value(op.a, rf, c))); break;
        case OpCode::FlagNotPositive: {
            const Lane8 x = operand_value(op.a, rf, c);
            flag_where([&](int i) { return !(x[i] > 0.0f); });
            break;
        }
        case OpCode::FlagGreater: {
            const Lane8 x = operand_value(op.a, rf, c), y = operand_value(op.b, rf, c);
            flag_where([&](int i) { return x[i] > y[i]; });
            break;
        }
        case OpCode::Move:
            if (op.dst == Slot::Status) {
                rf.get(Slot::Status);
            } else {
                rf.put(op.dst, operand_value(op.a, rf, c));
            }
            break;
        case OpCode::MarkPadding:
            rf.status.fill(0);
            rf.set_present(Slot::Status);
            for (int i = rf.valid_lanes; i < kLanes; ++i) rf.status[static_cast<std::size_t>(i)] |= op.flag;
            break;
        case OpCode::CheckInput: {
            const Lane8 v = operand_value(op.a, rf, c), z = operand_value(op.b, rf, c);
            flag_where([&](int i) { return !(v[i] >= 0.0f) || !std::isfinite(v[i]) || !std::isfinite(z[i]); });
            break;
        }
        case OpCode::CountSaturated:
            rf.get(Slot::Status);
            for (int i = 0; i < rf.valid_lanes; ++i) {
                if (rf.status[static_cast<std::size_t>(i)] & kSaturated) ++rf.saturated;
            }
            break;
        case OpCode::FlagNegative: {
            const Lane8 x = operand_value(op.a, rf, c);
            flag_where([&](int i) { return x[i] < 0.0f; });
            break;
        }
        case OpCode::FlagNonFinite: {
            const Lane8 x = operand_value(op.a, rf, c);
            flag_where([&](int i) { return !std::isfinite(x[i]); });
            break;
        }
    }
}

/// Throws DegenerateMomentsError naming the first valid lane carrying a
/// fatal status bit. @p base_index labels lane 0 in the message.
inline void raise_on_fatal_status(const RegFile& rf, std::uint64_t base_index = 0) {
    for (int i = 0; i < rf.valid_lanes; ++i) {
        const auto st = rf.status[static_cast<std::size_t>(i)];
        if (st & kFatalStatus) {
            std::ostringstream os;
            os << "lane " << i << " (element " << base_index + static_cast<std::uint64_t>(i)
               << ") status 0x" << std::hex << st;
            throw DegenerateMomentsError(os.str());
        }
    }
}

struct VecResult {
    Lane8 value;
    LaneMask saturated = 0;
    LaneMask padding = 0;
};

/// Vectorized step: the full schedule on one batch. Lanes at index >=
/// @p valid_lanes are padding; they are computed, flagged and never raise.
inline VecResult qe_update_vec(const Lane8& v, const Lane8& z, const QEConstants& c, int valid_lanes = kLanes) {
    RegFile rf;
    rf.valid_lanes = valid_lanes;
    rf.put(Slot::VIn, v);
    rf.put(Slot::ZIn, z);
    for (const auto& op : kProgram) execute_op(op, rf, c);
    raise_on_fatal_status(rf);
    VecResult r;
    r.value = rf.get(Slot::Out);
    for (int i = 0; i < kLanes; ++i) {
        if (rf.status[static_cast<std::size_t>(i)] & kSaturated) r.saturated |= static_cast<LaneMask>(1u << i);
        if (rf.status[static_cast<std::size_t>(i)] & kPadding) r.padding |= static_cast<LaneMask>(1u << i);
    }
    return r;
}

inline VecResult qe_update_vec(const Lane8& v, const Lane8& z, const QEConstants& c, const QEParams&) {
    return qe_update_vec(v, z, c);
}

}  // namespace aiesim
