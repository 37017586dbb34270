#pragma once

#include <charconv>
#include <string>
#include <string_view>
#include <vector>

#include "dacc/common/error.hpp"

namespace dacc::policy {

class PolicySyntaxError : public Error {
public:
    PolicySyntaxError(std::size_t line, std::size_t column, const std::string& message)
        : Error("syntax error at " + std::to_string(line) + ":" + std::to_string(column) + ": " + message),
          line_(line), column_(column), message_(message)
    {
    }
    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }
    const std::string& message() const noexcept { return message_; }

private:
    std::size_t line_;
    std::size_t column_;
    std::string message_;
};

enum class TokenKind { identifier, integer, string, variable, lparen, rparen, comma, equals, colon, star, less_equal, end };

struct Token {
    TokenKind kind = TokenKind::end;
    std::string text;
    std::size_t line = 1;
    std::size_t column = 1;
};

inline std::string_view describe(TokenKind k)
{
    switch (k) {
    case TokenKind::identifier: return "identifier";
    case TokenKind::integer: return "integer";
    case TokenKind::string: return "string";
    case TokenKind::variable: return "variable";
    case TokenKind::lparen: return "'('";
    case TokenKind::rparen: return "')'";
    case TokenKind::comma: return "','";
    case TokenKind::equals: return "'='";
    case TokenKind::colon: return "':'";
    case TokenKind::star: return "'*'";
    case TokenKind::less_equal: return "'<='";
    case TokenKind::end: return "end of input";
    }
    return "token";
}

inline bool ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
inline bool ident_char(char c)
{
    return ident_start(c) || (c >= '0' && c <= '9') || c == '.' || c == '-';
}

inline std::vector<Token> tokenize(std::string_view src)
{
    std::vector<Token> out;
    std::size_t line = 1, col = 1, i = 0;
    auto advance = [&](std::size_t n = 1) {
        for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
            if (src[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
    };
    while (i < src.size()) {
        char c = src[i];
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            advance();
            continue;
        }
        if (c == '#') {
            while (i < src.size() && src[i] != '\n') advance();
            continue;
        }
        Token t;
        t.line = line;
        t.column = col;
        if (ident_start(c)) {
            std::size_t j = i;
            while (j < src.size() && ident_char(src[j])) ++j;
            t.kind = TokenKind::identifier;
            t.text = std::string(src.substr(i, j - i));
            advance(j - i);
        } else if (c >= '0' && c <= '9') {
            std::size_t j = i;
            while (j < src.size() && src[j] >= '0' && src[j] <= '9') ++j;
            t.kind = TokenKind::integer;
            t.text = std::string(src.substr(i, j - i));
            advance(j - i);
        } else if (c == '$') {
            advance();
            if (i >= src.size() || !ident_start(src[i])) throw PolicySyntaxError(t.line, t.column, "expected variable name after '$'");
            std::size_t j = i;
            while (j < src.size() && ident_char(src[j]) && src[j] != '.') ++j;
            t.kind = TokenKind::variable;
            t.text = std::string(src.substr(i, j - i));
            advance(j - i);
        } else if (c == '"') {
            advance();
            std::string value;
            for (;;) {
                if (i >= src.size()) throw PolicySyntaxError(t.line, t.column, "unterminated string literal");
                char d = src[i];
                if (d == '"') {
                    advance();
                    break;
                }
                if (d == '\\') {
                    advance();
                    if (i >= src.size()) throw PolicySyntaxError(t.line, t.column, "unterminated string literal");
                    char e = src[i];
                    if (e != '"' && e != '\\') throw PolicySyntaxError(line, col, "unsupported escape sequence");
                    value.push_back(e);
                    advance();
                    continue;
                }
                if (d == '\n') throw PolicySyntaxError(t.line, t.column, "newline in string literal");
                value.push_back(d);
                advance();
            }
            t.kind = TokenKind::string;
            t.text = std::move(value);
        } else {
            switch (c) {
            case '(': t.kind = TokenKind::lparen; break;
            case ')': t.kind = TokenKind::rparen; break;
            case ',': t.kind = TokenKind::comma; break;
            case '=': t.kind = TokenKind::equals; break;
            case ':': t.kind = TokenKind::colon; break;
            case '*': t.kind = TokenKind::star; break;
            case '<':
                if (i + 1 < src.size() && src[i + 1] == '=') {
                    t.kind = TokenKind::less_equal;
                    t.text = "<=";
                    advance(2);
                    out.push_back(std::move(t));
                    continue;
                }
                [[fallthrough]];
            default:
                throw PolicySyntaxError(line, col, std::string("unexpected character '") + c + "'");
            }
            t.text = std::string(1, c);
            advance();
        }
        out.push_back(std::move(t));
    }
    Token end;
    end.kind = TokenKind::end;
    end.line = line;
    end.column = col;
    out.push_back(end);
    return out;
}

} // namespace dacc::policy
