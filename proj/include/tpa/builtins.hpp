#pragma once

#include <optional>

#include "tpa/sysmodel.hpp"

namespace tpa {

/// Fair merge of two channels onto one (also known as the timed merge
/// automaton): a single state, and one transition per interleaving of the
/// tick's arrivals. Weakly but not strongly pulse-driven.
Automaton fair_merge(const std::string& i = "i", const std::string& j = "j",
                     const std::string& o = "o");

/// Unbounded FIFO buffer with forced progress: whenever the buffer is
/// nonempty it emits a nonempty prefix of it, so every message is eventually
/// reproduced in order. The tick's output is drawn from the pre-tick buffer,
/// making it strongly pulse-driven.
Automaton buffer(const std::string& i = "i", const std::string& o = "o");

enum class Bit { O, L };
Message bit_msg(Bit b);
std::optional<Bit> parse_bit(const Message& m);

/// Nor gate with one tick of delay: it emits its state and latches the nor of
/// its two inputs. Irregular input (not exactly one bit per channel) holds
/// the state. Initial state free unless pinned.
Automaton nor_gate(const std::string& a, const std::string& b, const std::string& o,
                   std::optional<Bit> initial = std::nullopt);

/// Emits 1 prepended to the tick's input, in the same tick. Two of these in a
/// feedback loop demand mutually inconsistent outputs and block.
Automaton prepend_one(const std::string& in, const std::string& out);

// ---------------------------------------------------------------------------
// Queue
// ---------------------------------------------------------------------------

/// Queue message helpers. Payloads: enq carries the value, deq carries the
/// id the reply should go to, deqd carries "value,next".
Message enq_msg(const std::string& value, const std::string& sender, const std::string& receiver);
Message deq_msg(const std::string& reply_to, const std::string& sender,
                const std::string& receiver);
Message deqd_msg(const std::string& value, const std::string& next, const std::string& sender,
                 const std::string& receiver);
std::pair<std::string, std::string> parse_deqd(const Message& m);

/// One linked-list queue element with channels <id>.i and <id>.o. An empty
/// element absorbs an enq and allocates its successor from `creatable`; an
/// occupied one forwards enq to its successor and answers deq with
/// deqd(value, successor). Off-table input moves to an absorbing chaotic
/// marker, allocation from an empty pool to a pool-exhausted marker; both
/// emit nothing forever.
Automaton queue_element(const std::string& id, std::vector<std::string> creatable);

struct AssembledNetwork {
  Automaton automaton;  // external view, internal ports hidden
  Automaton composite;  // the same composition before hiding
  Automaton medium;
  std::vector<std::string> part_ids;
  MediumSpec medium_spec;
};

struct QueueOptions {
  std::size_t batch = 1;
  std::size_t window = 0;
  std::size_t nil_slots = 0;
};

/// FIFO queue holding up to `pool` values, implemented by pool + 1 lazily
/// created elements behind a cmas medium that routes by receiver id.
/// External channels qu.i / qu.o; element q0 is live from the start, each
/// element can create the next one.
AssembledNetwork queue_network(std::size_t pool, const QueueOptions& options = {});

/// RS flip-flop: two moore nor gates wired through a zero-delay medium.
/// External inputs s (set, toward gate 1) and r (reset, toward gate 2),
/// outputs q (gate 2's line) and qbar (gate 1's line).
AssembledNetwork flipflop_network(std::optional<Bit> init1 = std::nullopt,
                                  std::optional<Bit> init2 = std::nullopt);

}  // namespace tpa
