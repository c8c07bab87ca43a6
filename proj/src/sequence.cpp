// Copyright 2026 The v1spin Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "v1spin/sequence.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

namespace v1spin::pulsesim {

std::string to_string(Channel c) {
  switch (c) {
    case Channel::A1: return "A1";
    case Channel::A2: return "A2";
    case Channel::OFFRES: return "OFFRES";
    case Channel::MW1: return "MW1";
    case Channel::MW2: return "MW2";
    case Channel::MW3: return "MW3";
  }
  return "?";
}

std::string to_string(Unit u) {
  switch (u) {
    case Unit::ns: return "ns";
    case Unit::us: return "us";
    case Unit::ms: return "ms";
  }
  return "?";
}

std::string to_string(Phase p) {
  switch (p) {
    case Phase::plus_x: return "+x";
    case Phase::minus_x: return "-x";
    case Phase::plus_y: return "+y";
    case Phase::minus_y: return "-y";
  }
  return "?";
}

bool is_mw(Channel c) { return c == Channel::MW1 || c == Channel::MW2 || c == Channel::MW3; }

int mw_index(Channel c) {
  switch (c) {
    case Channel::MW1: return 1;
    case Channel::MW2: return 2;
    case Channel::MW3: return 3;
    default: throw ConfigError("not a microwave channel: " + to_string(c));
  }
}

Channel mw_channel(int index) {
  switch (index) {
    case 1: return Channel::MW1;
    case 2: return Channel::MW2;
    case 3: return Channel::MW3;
    default: throw ConfigError("mw channel must be 1, 2 or 3");
  }
}

double Duration::microseconds() const {
  switch (unit) {
    case Unit::ns: return value * 1e-3;
    case Unit::us: return value;
    case Unit::ms: return value * 1e3;
  }
  return value;
}

double DurationRef::microseconds(double swept_us) const {
  return literal ? literal->microseconds() : swept_us;
}

std::vector<double> SweepDecl::values_us() const {
  return linspace(start.microseconds(), stop.microseconds(), static_cast<std::size_t>(points));
}

namespace {

struct Token {
  std::string text;
  std::size_t column = 0;  // 1-based
};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
  return s;
}

bool is_ident(const std::string& s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isalnum(c) || c == '_'; });
}

class LineParser {
 public:
  LineParser(std::vector<Token> tokens, std::size_t line) : toks_(std::move(tokens)), line_(line) {}

  [[noreturn]] void fail(const std::string& msg, std::size_t column) const {
    std::ostringstream os;
    os << "line " << line_ << ", column " << column << ": " << msg;
    throw ParseError(os.str(), line_, column);
  }

  bool done() const { return pos_ >= toks_.size(); }
  const Token& peek() const { return toks_[pos_]; }
  std::size_t end_column() const {
    return toks_.empty() ? 1 : toks_.back().column + toks_.back().text.size();
  }

  const Token& next(const char* what) {
    if (done()) fail(std::string("expected ") + what, end_column());
    return toks_[pos_++];
  }

  Channel channel() {
    const Token& t = next("channel");
    const std::string u = upper(t.text);
    for (Channel c : {Channel::A1, Channel::A2, Channel::OFFRES, Channel::MW1, Channel::MW2, Channel::MW3})
      if (u == to_string(c)) return c;
    fail("unknown channel " + t.text, t.column);
  }

  Duration duration_literal(const Token& t) {
    const char* b = t.text.data();
    const char* e = b + t.text.size();
    double v = 0;
    auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || ptr == b) fail("malformed duration '" + t.text + "'", t.column);
    const std::string unit = lower(std::string(ptr, e));
    Duration d;
    d.value = v;
    if (unit == "ns") d.unit = Unit::ns;
    else if (unit == "us") d.unit = Unit::us;
    else if (unit == "ms") d.unit = Unit::ms;
    else fail("malformed duration '" + t.text + "' (unit must be ns, us or ms)", t.column);
    if (!std::isfinite(v)) fail("malformed duration '" + t.text + "'", t.column);
    return d;
  }

  DurationRef duration(std::vector<std::pair<std::string, std::size_t>>& uses) {
    const Token& t = next("duration");
    DurationRef r;
    if (is_ident(t.text)) {
      r.symbol = t.text;
      uses.emplace_back(t.text, t.column);
      return r;
    }
    const Duration d = duration_literal(t);
    if (!(d.value > 0)) fail("duration must be > 0", t.column);
    r.literal = d;
    return r;
  }

  std::vector<Channel> with_clause() {
    std::vector<Channel> out;
    if (done()) return out;
    const Token& kw = next("'with'");
    if (lower(kw.text) != "with") fail("unexpected token '" + kw.text + "'", kw.column);
    if (done()) fail("expected microwave channel after 'with'", end_column());
    while (!done()) {
      const std::size_t col = peek().column;
      const Channel c = channel();
      if (!is_mw(c)) fail("'with' takes microwave channels, got " + to_string(c), col);
      if (std::find(out.begin(), out.end(), c) != out.end()) fail("duplicate channel " + to_string(c), col);
      out.push_back(c);
    }
    return out;
  }

  void expect_end() {
    if (!done()) fail("unexpected token '" + peek().text + "'", peek().column);
  }

  std::size_t line() const { return line_; }

 private:
  std::vector<Token> toks_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    const char c = line[i];
    if (c == '#') break;
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j])) && line[j] != '#') ++j;
    out.push_back({std::string(line.substr(i, j - i)), i + 1});
    i = j;
  }
  return out;
}

std::string fmt(const Duration& d) { return format_double(d.value) + to_string(d.unit); }

std::string fmt(const DurationRef& d) { return d.literal ? fmt(*d.literal) : d.symbol; }

}  // namespace

PulseSequence parse_sequence(std::string_view text) {
  PulseSequence seq;
  std::vector<std::pair<std::string, std::size_t>> uses;  // symbol, column
  std::vector<std::size_t> use_lines;
  std::size_t sweep_line = 0;

  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(start, end - start);
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    ++line_no;
    start = end + 1;

    auto toks = tokenize(raw);
    if (toks.empty()) {
      if (end == text.size()) break;
      continue;
    }
    LineParser p(std::move(toks), line_no);
    const Token kw = p.next("statement");
    const std::string k = lower(kw.text);
    const std::size_t before = uses.size();

    if (k == "mw") {
      MwPulse m;
      const std::size_t col = p.peek().column;
      m.channel = p.channel();
      if (!is_mw(m.channel)) p.fail("mw needs MW1, MW2 or MW3, got " + to_string(m.channel), col);
      const Token& rt = p.next("rotation");
      const std::string r = lower(rt.text);
      if (r == "pi") {
        m.rotation.kind = Rotation::Kind::pi;
      } else if (r == "pi/2") {
        m.rotation.kind = Rotation::Kind::half_pi;
      } else if (r.size() > 3 && r.ends_with("deg")) {
        double v = 0;
        auto [ptr, ec] = std::from_chars(rt.text.data(), rt.text.data() + rt.text.size() - 3, v);
        if (ec != std::errc() || ptr != rt.text.data() + rt.text.size() - 3 || !std::isfinite(v))
          p.fail("malformed rotation angle '" + rt.text + "'", rt.column);
        m.rotation.kind = Rotation::Kind::degrees;
        m.rotation.degrees = v;
      } else if (is_ident(rt.text)) {
        m.rotation.kind = Rotation::Kind::duration;
        m.rotation.duration.symbol = rt.text;
        uses.emplace_back(rt.text, rt.column);
      } else {
        const Duration d = p.duration_literal(rt);
        if (!(d.value > 0)) p.fail("duration must be > 0", rt.column);
        m.rotation.kind = Rotation::Kind::duration;
        m.rotation.duration.literal = d;
      }
      if (!p.done()) {
        const Token& ph = p.next("phase");
        const std::string s = lower(ph.text);
        if (s == "+x") m.phase = Phase::plus_x;
        else if (s == "-x") m.phase = Phase::minus_x;
        else if (s == "+y") m.phase = Phase::plus_y;
        else if (s == "-y") m.phase = Phase::minus_y;
        else p.fail("unknown phase '" + ph.text + "' (expected +x, -x, +y or -y)", ph.column);
      }
      p.expect_end();
      seq.elements.emplace_back(m);
    } else if (k == "wait") {
      Wait w;
      w.duration = p.duration(uses);
      p.expect_end();
      seq.elements.emplace_back(w);
    } else if (k == "laser" || k == "readout") {
      const std::size_t col = p.peek().column;
      const Channel c = p.channel();
      if (is_mw(c)) p.fail(k + " needs an optical channel (A1, A2, OFFRES), got " + to_string(c), col);
      if (k == "readout" && c == Channel::OFFRES) p.fail("readout needs A1 or A2", col);
      const DurationRef d = p.duration(uses);
      const std::size_t wcol = p.done() ? 0 : p.peek().column;
      std::vector<Channel> with = p.with_clause();
      if (c == Channel::OFFRES && !with.empty()) p.fail("'with' is not allowed on OFFRES", wcol);
      if (k == "laser") seq.elements.emplace_back(Laser{c, d, std::move(with)});
      else seq.elements.emplace_back(Readout{c, d, std::move(with)});
    } else if (k == "sweep") {
      if (seq.sweep) p.fail("only one sweep is allowed (first on line " + std::to_string(sweep_line) + ")", kw.column);
      SweepDecl s;
      const Token& name = p.next("sweep symbol");
      if (!is_ident(name.text)) p.fail("invalid sweep symbol '" + name.text + "'", name.column);
      s.symbol = name.text;
      const Token& a = p.next("start duration");
      s.start = p.duration_literal(a);
      if (s.start.value < 0) p.fail("sweep start must be >= 0", a.column);
      const Token& b = p.next("stop duration");
      s.stop = p.duration_literal(b);
      if (s.stop.value < 0) p.fail("sweep stop must be >= 0", b.column);
      const Token& n = p.next("point count");
      int pts = 0;
      auto [ptr, ec] = std::from_chars(n.text.data(), n.text.data() + n.text.size(), pts);
      if (ec != std::errc() || ptr != n.text.data() + n.text.size() || pts < 1)
        p.fail("point count must be a positive integer, got '" + n.text + "'", n.column);
      s.points = pts;
      p.expect_end();
      seq.sweep = s;
      sweep_line = line_no;
    } else {
      p.fail("unknown statement '" + kw.text + "'", kw.column);
    }
    for (std::size_t i = before; i < uses.size(); ++i) use_lines.push_back(line_no);
    if (end == text.size()) break;
  }

  for (std::size_t i = 0; i < uses.size(); ++i) {
    if (!seq.sweep || seq.sweep->symbol != uses[i].first) {
      std::ostringstream os;
      os << "line " << use_lines[i] << ", column " << uses[i].second << ": undeclared symbol " << uses[i].first;
      throw ParseError(os.str(), use_lines[i], uses[i].second);
    }
  }
  if (seq.elements.empty()) throw ParseError("line 1, column 1: empty sequence", 1, 1);
  return seq;
}

std::string print_sequence(const PulseSequence& seq) {
  std::ostringstream os;
  if (seq.sweep) {
    const auto& s = *seq.sweep;
    os << "sweep " << s.symbol << ' ' << fmt(s.start) << ' ' << fmt(s.stop) << ' ' << s.points << '\n';
  }
  auto with = [&](const std::vector<Channel>& w) {
    if (w.empty()) return;
    os << " with";
    for (Channel c : w) os << ' ' << to_string(c);
  };
  for (const auto& e : seq.elements) {
    if (const auto* m = std::get_if<MwPulse>(&e)) {
      os << "mw " << to_string(m->channel) << ' ';
      switch (m->rotation.kind) {
        case Rotation::Kind::pi: os << "pi"; break;
        case Rotation::Kind::half_pi: os << "pi/2"; break;
        case Rotation::Kind::degrees: os << format_double(m->rotation.degrees) << "deg"; break;
        case Rotation::Kind::duration: os << fmt(m->rotation.duration); break;
      }
      os << ' ' << to_string(m->phase) << '\n';
    } else if (const auto* w = std::get_if<Wait>(&e)) {
      os << "wait " << fmt(w->duration) << '\n';
    } else if (const auto* l = std::get_if<Laser>(&e)) {
      os << "laser " << to_string(l->channel) << ' ' << fmt(l->duration);
      with(l->with);
      os << '\n';
    } else if (const auto* r = std::get_if<Readout>(&e)) {
      os << "readout " << to_string(r->channel) << ' ' << fmt(r->duration);
      with(r->with);
      os << '\n';
    }
  }
  return os.str();
}

}  // namespace v1spin::pulsesim
