#include <cctype>
#include <string>

#include "densop/expr.hpp"

namespace densop {

namespace {

struct Parser {
  std::string_view text;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }

  char peek() {
    skip_ws();
    return pos < text.size() ? text[pos] : '\0';
  }

  bool accept(char c) {
    if (peek() == c) {
      ++pos;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) throw ParseError(std::string("expected '") + c + "'", pos);
  }

  [[noreturn]] void fail(const std::string& msg) { throw ParseError(msg, pos); }

  Expr parse() {
    Expr e = expression();
    skip_ws();
    if (pos != text.size()) fail("unexpected trailing input");
    return e;
  }

  Expr expression() {
    Expr e = term();
    while (true) {
      if (accept('+'))
        e = e + term();
      else if (accept('-'))
        e = e - term();
      else
        return e;
    }
  }

  Expr term() {
    Expr e = unary();
    while (true) {
      if (accept('*'))
        e = e * unary();
      else if (accept('/'))
        e = e / unary();
      else
        return e;
    }
  }

  Expr unary() {
    if (accept('-')) return -unary();
    if (accept('+')) return unary();
    return power();
  }

  Expr power() {
    Expr base = primary();
    if (accept('^')) return Expr::power(std::move(base), exponent());
    return base;
  }

  // exponents are integers; `a^b^c` nests to the right, so the chain after
  // the first '^' folds into one integer
  long long exponent() {
    long long e = signed_integer();
    if (accept('^')) {
      long long f = exponent();
      if (f < 0) fail("negative exponent inside an exponent tower");
      long long r = 1;
      for (long long i = 0; i < f; ++i) {
        if (r > 1024 || r < -1024) fail("exponent tower too large");
        r *= e;
      }
      return r;
    }
    return e;
  }

  long long signed_integer() {
    if (accept('(')) {
      long long v = signed_integer();
      expect(')');
      return v;
    }
    bool neg = false;
    if (accept('-'))
      neg = true;
    else
      accept('+');
    skip_ws();
    if (pos >= text.size() || !std::isdigit(static_cast<unsigned char>(text[pos])))
      fail("expected integer exponent");
    long long v = 0;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
      v = v * 10 + (text[pos] - '0');
      if (v > 1'000'000) fail("exponent too large");
      ++pos;
    }
    return neg ? -v : v;
  }

  Expr primary() {
    char c = peek();
    if (c == '(') {
      ++pos;
      Expr e = expression();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    fail("expected a number, variable, function, or '('");
  }

  Expr number() {
    skip_ws();
    std::size_t start = pos;
    long long ipart = 0;
    bool any = false;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
      any = true;
      if (ipart > 100'000'000'000'000'000LL) throw ParseError("numeric literal too large", start);
      ipart = ipart * 10 + (text[pos] - '0');
      ++pos;
    }
    Rational value(ipart);
    if (pos < text.size() && text[pos] == '.') {
      ++pos;
      long long frac = 0, scale = 1;
      bool fany = false;
      while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
        fany = true;
        if (scale > 100'000'000'000'000'000LL)
          throw ParseError("too many decimal digits", start);
        frac = frac * 10 + (text[pos] - '0');
        scale *= 10;
        ++pos;
      }
      if (!any && !fany) throw ParseError("malformed number", start);
      value = Rational(ipart) + Rational(frac, scale);
    } else if (!any) {
      throw ParseError("malformed number", start);
    }
    return Expr::constant(value);
  }

  Expr identifier() {
    skip_ws();
    std::size_t start = pos;
    while (pos < text.size() && (std::isalnum(static_cast<unsigned char>(text[pos])))) ++pos;
    std::string_view name = text.substr(start, pos - start);
    if (name.size() >= 2 && name[0] == 'x') {
      bool digits = true;
      for (std::size_t i = 1; i < name.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(name[i]))) digits = false;
      if (digits) {
        int idx = 0;
        for (std::size_t i = 1; i < name.size(); ++i) {
          idx = idx * 10 + (name[i] - '0');
          if (idx > 1'000'000) throw ParseError("variable index too large", start);
        }
        return Expr::variable(idx);
      }
    }
    if (name == "exp" || name == "log" || name == "sin" || name == "cos") {
      expect('(');
      Expr arg = expression();
      expect(')');
      if (name == "exp") return Expr::exp(std::move(arg));
      if (name == "log") return Expr::log(std::move(arg));
      if (name == "sin") return Expr::sin(std::move(arg));
      return Expr::cos(std::move(arg));
    }
    throw ParseError("unknown identifier '" + std::string(name) + "'", start);
  }
};

} // namespace

Expr parse_expression(std::string_view text) {
  Parser p{text};
  return p.parse();
}

} // namespace densop
