#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "bbi/circuit.hpp"

namespace bbi {

namespace {

std::string position_message(int line, int column, const std::string& message) {
  std::ostringstream os;
  os << "line " << line << ", column " << column << ": " << message;
  return os.str();
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

struct Token {
  enum class Type { Word, Number, Punct, End };
  Type type = Type::End;
  std::string text;
  int line = 0;
  int column = 0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  Token next() {
    skip_space();
    Token t;
    t.line = line_;
    t.column = column_;
    if (pos_ >= text_.size()) return t;
    const char c = text_[pos_];
    if (c == '{' || c == '}' || c == ';') {
      t.type = Token::Type::Punct;
      t.text = std::string(1, c);
      advance();
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      t.type = Token::Type::Number;
      while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
        t.text += text_[pos_];
        advance();
      }
      return t;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      t.type = Token::Type::Word;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_' || text_[pos_] == '-')) {
        t.text += text_[pos_];
        advance();
      }
      return t;
    }
    throw ParseError(line_, column_, std::string("unexpected character '") + c + "'");
  }

 private:
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int column_ = 1;
};

class Parser {
 public:
  Parser(std::string_view text, const GateLibrary* library) : lex_(text), library_(library) { tok_ = lex_.next(); }

  Circuit parse() {
    Circuit c;
    std::set<std::string> seen;
    if (tok_.type == Token::Type::End) throw ParseError(tok_.line, tok_.column, "empty circuit");
    while (tok_.type != Token::Type::End) {
      expect_word("axis");
      const Token id = tok_;
      if (id.type != Token::Type::Word || (id.text != "x" && id.text != "z")) {
        throw ParseError(id.line, id.column, "axis must be x or z, got '" + id.text + "'");
      }
      if (!seen.insert(id.text).second) throw ParseError(id.line, id.column, "axis " + id.text + " declared twice");
      take();
      AxisProgram p;
      p.axis = id.text;
      expect_punct("{");
      p.elements = block();
      c.axes.push_back(std::move(p));
    }
    return c;
  }

 private:
  // Statements up to and including the closing brace.
  std::vector<CircuitElement> block() {
    std::vector<CircuitElement> out;
    while (!(tok_.type == Token::Type::Punct && tok_.text == "}")) {
      if (tok_.type == Token::Type::End) throw ParseError(tok_.line, tok_.column, "missing '}'");
      out.push_back(statement());
    }
    take();
    return out;
  }

  CircuitElement statement() {
    const Token head = tok_;
    if (head.type != Token::Type::Word) {
      throw ParseError(head.line, head.column, "expected gate, wait or repeat, got '" + head.text + "'");
    }
    CircuitElement e;
    e.line = head.line;
    e.column = head.column;
    take();
    if (head.text == "gate") {
      e.kind = CircuitElement::Kind::Gate;
      const Token name = tok_;
      if (name.type != Token::Type::Word) throw ParseError(name.line, name.column, "expected a gate name");
      if (library_ && !library_->contains(name.text)) {
        throw ParseError(name.line, name.column, "unknown gate '" + name.text + "'");
      }
      e.gate = upper(name.text);
      take();
      while (tok_.type == Token::Type::Word && (tok_.text == "rev" || tok_.text == "neg")) {
        if (tok_.text == "rev") {
          e.reversed = !e.reversed;
        } else {
          e.negated = !e.negated;
        }
        take();
      }
      if (tok_.type == Token::Type::Word) throw ParseError(tok_.line, tok_.column, "unknown modifier '" + tok_.text + "'");
      expect_punct(";");
    } else if (head.text == "wait") {
      e.kind = CircuitElement::Kind::Wait;
      const Token d = tok_;
      if (d.type != Token::Type::Number) throw ParseError(d.line, d.column, "expected a duration such as 150us");
      try {
        e.duration_ns = parse_duration_ns(d.text);
      } catch (const ValidationError& err) {
        throw ParseError(d.line, d.column, err.what());
      }
      take();
      expect_punct(";");
    } else if (head.text == "repeat") {
      e.kind = CircuitElement::Kind::Repeat;
      const Token n = tok_;
      const bool digits =
          n.type == Token::Type::Number && std::all_of(n.text.begin(), n.text.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
      if (!digits || n.text.size() > 6) throw ParseError(n.line, n.column, "expected a repeat count");
      e.repeat = std::stoi(n.text);
      if (e.repeat < 1) throw ParseError(n.line, n.column, "repeat count must be at least 1");
      take();
      expect_punct("{");
      e.body = block();
    } else {
      throw ParseError(head.line, head.column, "unknown statement '" + head.text + "'");
    }
    return e;
  }

  void take() { tok_ = lex_.next(); }

  void expect_word(const std::string& w) {
    if (tok_.type != Token::Type::Word || tok_.text != w) {
      throw ParseError(tok_.line, tok_.column, "expected '" + w + "'" + found());
    }
    take();
  }

  void expect_punct(const std::string& p) {
    if (tok_.type != Token::Type::Punct || tok_.text != p) {
      throw ParseError(tok_.line, tok_.column, "expected '" + p + "'" + found());
    }
    take();
  }

  std::string found() const {
    return tok_.type == Token::Type::End ? " before end of input" : ", got '" + tok_.text + "'";
  }

  Lexer lex_;
  const GateLibrary* library_;
  Token tok_;
};

void format_elements(const std::vector<CircuitElement>& els, int indent, std::ostringstream& os) {
  const std::string pad(static_cast<std::size_t>(indent), ' ');
  for (const auto& e : els) {
    switch (e.kind) {
      case CircuitElement::Kind::Gate:
        os << pad << "gate " << e.gate << (e.reversed ? " rev" : "") << (e.negated ? " neg" : "") << ";\n";
        break;
      case CircuitElement::Kind::Wait:
        os << pad << "wait " << format_duration(e.duration_ns) << ";\n";
        break;
      case CircuitElement::Kind::Repeat:
        os << pad << "repeat " << e.repeat << " {\n";
        format_elements(e.body, indent + 2, os);
        os << pad << "}\n";
        break;
    }
  }
}

void expand_into(const std::vector<CircuitElement>& els, std::vector<CircuitElement>& out) {
  for (const auto& e : els) {
    if (e.kind == CircuitElement::Kind::Repeat) {
      for (int r = 0; r < e.repeat; ++r) expand_into(e.body, out);
    } else {
      out.push_back(e);
    }
  }
}

void collect_gates(const std::vector<CircuitElement>& els, std::vector<std::string>& names) {
  for (const auto& e : els) {
    if (e.kind == CircuitElement::Kind::Gate && std::find(names.begin(), names.end(), e.gate) == names.end()) {
      names.push_back(e.gate);
    }
    if (e.kind == CircuitElement::Kind::Repeat) collect_gates(e.body, names);
  }
}

}  // namespace

ParseError::ParseError(int line, int column, const std::string& message)
    : ValidationError(position_message(line, column, message)), line_(line), column_(column) {}

CircuitElement CircuitElement::make_gate(std::string name, bool rev, bool neg) {
  CircuitElement e;
  e.kind = Kind::Gate;
  e.gate = upper(name);
  e.reversed = rev;
  e.negated = neg;
  return e;
}

CircuitElement CircuitElement::make_wait(std::int64_t ns) {
  if (ns <= 0 || ns % kAwgSamplePeriodNs != 0) throw ValidationError("wait must be a positive multiple of 50 ns");
  CircuitElement e;
  e.kind = Kind::Wait;
  e.duration_ns = ns;
  return e;
}

CircuitElement CircuitElement::make_repeat(int n, std::vector<CircuitElement> body) {
  if (n < 1) throw ValidationError("repeat count must be at least 1");
  CircuitElement e;
  e.kind = Kind::Repeat;
  e.repeat = n;
  e.body = std::move(body);
  return e;
}

const AxisProgram* Circuit::axis(std::string_view name) const {
  for (const auto& a : axes) {
    if (a.axis == name) return &a;
  }
  return nullptr;
}

std::vector<std::string> Circuit::gate_names() const {
  std::vector<std::string> names;
  for (const auto& a : axes) collect_gates(a.elements, names);
  return names;
}

std::int64_t parse_duration_ns(std::string_view text) {
  std::size_t i = 0;
  std::string whole;
  std::string frac;
  while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) whole += text[i++];
  if (i < text.size() && text[i] == '.') {
    ++i;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) frac += text[i++];
  }
  const std::string unit(text.substr(i));
  if (whole.empty() && frac.empty()) throw ValidationError("malformed duration '" + std::string(text) + "'");
  int exponent = 0;  // power of ten from the unit to ns
  if (unit == "ns") {
    exponent = 0;
  } else if (unit == "us") {
    exponent = 3;
  } else if (unit == "ms") {
    exponent = 6;
  } else if (unit == "s") {
    exponent = 9;
  } else {
    throw ValidationError("duration '" + std::string(text) + "' needs a unit of ns, us, ms or s");
  }
  // Exact decimal arithmetic: digits * 10^(exponent - len(frac)).
  std::string digits = whole + frac;
  int shift = exponent - static_cast<int>(frac.size());
  while (shift < 0) {
    if (digits.empty() || digits.back() != '0') {
      throw ValidationError("duration '" + std::string(text) + "' is not a whole number of nanoseconds");
    }
    digits.pop_back();
    ++shift;
  }
  digits.append(static_cast<std::size_t>(shift), '0');
  digits.erase(0, std::min(digits.find_first_not_of('0'), digits.size()));
  if (digits.size() > 15) throw ValidationError("duration '" + std::string(text) + "' is too long");
  const std::int64_t ns = digits.empty() ? 0 : std::stoll(digits);
  if (ns <= 0) throw ValidationError("duration must be positive");
  if (ns % kAwgSamplePeriodNs != 0) {
    throw ValidationError("duration '" + std::string(text) + "' is not a multiple of the 50 ns sample period");
  }
  return ns;
}

std::string format_duration(std::int64_t ns) {
  if (ns % 1000000 == 0) return std::to_string(ns / 1000000) + "ms";
  if (ns % 1000 == 0) return std::to_string(ns / 1000) + "us";
  return std::to_string(ns) + "ns";
}

Circuit parse_circuit(std::string_view text, const GateLibrary* library) { return Parser(text, library).parse(); }

std::string format_circuit(const Circuit& c) {
  std::ostringstream os;
  for (const auto& a : c.axes) {
    os << "axis " << a.axis << " {\n";
    format_elements(a.elements, 2, os);
    os << "}\n";
  }
  return os.str();
}

Circuit expand_repeats(const Circuit& c) {
  Circuit out;
  for (const auto& a : c.axes) {
    AxisProgram p;
    p.axis = a.axis;
    expand_into(a.elements, p.elements);
    out.axes.push_back(std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::optional<std::string> GateLibrary::key_of(std::string_view name) const {
  const std::string key = upper(name);
  if (gates_.count(key)) return key;
  if (!key.empty() && !std::isdigit(static_cast<unsigned char>(key.back())) && gates_.count(key + "1")) {
    return key + "1";
  }
  return std::nullopt;
}

void GateLibrary::add(const std::string& name, Waveform w) {
  if (name.empty()) throw ValidationError("gate name must not be empty");
  w.validate();
  gates_[upper(name)] = std::move(w);
}

bool GateLibrary::contains(std::string_view name) const { return key_of(name).has_value(); }

const Waveform& GateLibrary::resolve(std::string_view name) const {
  const auto key = key_of(name);
  if (!key) throw ValidationError("unknown gate '" + std::string(name) + "'");
  return gates_.at(*key);
}

std::vector<std::string> GateLibrary::names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : gates_) out.push_back(k);
  return out;
}

GateLibrary GateLibrary::load(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ValidationError("gate library directory not found: " + dir.string());
  GateLibrary lib;
  const std::string suffix = ".wave.json";
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string fname = entry.path().filename().string();
    if (entry.is_regular_file() && fname.size() > suffix.size() &&
        fname.compare(fname.size() - suffix.size(), suffix.size(), suffix) == 0) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    const std::string fname = f.filename().string();
    lib.add(fname.substr(0, fname.size() - suffix.size()), load_waveform(f));
  }
  if (lib.size() == 0) throw ValidationError("no *.wave.json gates in " + dir.string());
  return lib;
}

void GateLibrary::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  for (const auto& [name, w] : gates_) save_waveform(w, dir / (name + ".wave.json"));
}

std::string short_gate_name(GateKind kind) {
  switch (kind) {
    case GateKind::Beamsplitter: return "BS";
    case GateKind::AsymBeamsplitter: return "ASYM";
    case GateKind::Mirror: return "MIRROR";
    case GateKind::CbBeamsplitter: return "CBBS";
    case GateKind::SplitHold: return "SH";
    case GateKind::Echo: return "ECHO";
    case GateKind::Identity: return "ID";
  }
  return "ID";
}

std::string library_name(GateKind kind, int variant) { return short_gate_name(kind) + std::to_string(variant); }

}  // namespace bbi
