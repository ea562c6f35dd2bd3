#include <algorithm>
#include <cctype>
#include <optional>
#include <set>

#include "wmm/error.hpp"
#include "wmm/jags.hpp"

namespace wmm::jags {

namespace {

enum class Tok {
    Ident, Number, Arrow, Tilde, LParen, RParen, LBrace, RBrace, LBracket, RBracket,
    Comma, Semi, Colon, Slash, Plus, Minus, End,
};

struct Token {
    Tok kind;
    std::string text;
    int line;
    int col;
};

[[noreturn]] void fail(const Token& at, const std::string& message) {
    throw validation_error("jags parse error at " + std::to_string(at.line) + ":" +
                           std::to_string(at.col) + ": " + message);
}

std::vector<Token> tokenize(const std::string& text) {
    std::vector<Token> tokens;
    int line = 1, col = 1;
    std::size_t i = 0;
    auto advance = [&](char c) {
        if (c == '\n') { ++line; col = 1; } else { ++col; }
    };
    while (i < text.size()) {
        char c = text[i];
        if (c == '#') {
            while (i < text.size() && text[i] != '\n') { advance(text[i]); ++i; }
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) { advance(c); ++i; continue; }
        int tl = line, tc = col;
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::string word;
            while (i < text.size() &&
                   (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '.')) {
                word += text[i];
                advance(text[i]);
                ++i;
            }
            tokens.push_back({Tok::Ident, word, tl, tc});
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::string num;
            while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
                num += text[i];
                advance(text[i]);
                ++i;
            }
            tokens.push_back({Tok::Number, num, tl, tc});
            continue;
        }
        if (c == '<' && i + 1 < text.size() && text[i + 1] == '-') {
            tokens.push_back({Tok::Arrow, "<-", tl, tc});
            advance('<'); advance('-');
            i += 2;
            continue;
        }
        Tok kind;
        switch (c) {
        case '~': kind = Tok::Tilde; break;
        case '(': kind = Tok::LParen; break;
        case ')': kind = Tok::RParen; break;
        case '{': kind = Tok::LBrace; break;
        case '}': kind = Tok::RBrace; break;
        case '[': kind = Tok::LBracket; break;
        case ']': kind = Tok::RBracket; break;
        case ',': kind = Tok::Comma; break;
        case ';': kind = Tok::Semi; break;
        case ':': kind = Tok::Colon; break;
        case '/': kind = Tok::Slash; break;
        case '+': kind = Tok::Plus; break;
        case '-': kind = Tok::Minus; break;
        default:
            throw validation_error("jags parse error at " + std::to_string(line) + ":" +
                                   std::to_string(col) + ": unexpected character '" +
                                   std::string(1, c) + "'");
        }
        tokens.push_back({kind, std::string(1, c), tl, tc});
        advance(c);
        ++i;
    }
    tokens.push_back({Tok::End, "", line, col});
    return tokens;
}

const std::set<std::string> kDistributions = {"dlnorm", "dunif", "ddirch", "dbeta", "dbinom"};
const std::set<std::string> kFunctions = {"c", "round", "sum"};

class Parser {
public:
    explicit Parser(const std::string& text) : tokens_(tokenize(text)) {}

    ParseSummary run() {
        expect_keyword("data", "expected data or model block");
        expect(Tok::LBrace, "expected '{'");
        in_data_ = true;
        while (!at(Tok::RBrace)) statement();
        expect(Tok::RBrace, "expected '}'");
        in_data_ = false;
        expect_keyword("model", "expected model block");
        expect(Tok::LBrace, "expected '{'");
        while (!at(Tok::RBrace)) statement();
        expect(Tok::RBrace, "expected '}'");
        if (!at(Tok::End)) fail(peek(), "trailing input after model block");
        return summary_;
    }

private:
    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
    bool in_data_ = false;
    std::map<std::string, std::pair<int, int>> loop_env_;  // loop var -> inclusive range
    std::set<std::string> sampled_keys_;                   // name[index] uniqueness
    ParseSummary summary_;

    const Token& peek() const { return tokens_[pos_]; }
    const Token& next() { return tokens_[pos_++]; }
    bool at(Tok kind) const { return peek().kind == kind; }

    const Token& expect(Tok kind, const std::string& message) {
        if (!at(kind)) fail(peek(), message + ", got '" + peek().text + "'");
        return next();
    }

    void expect_keyword(const std::string& word, const std::string& message) {
        if (!at(Tok::Ident) || peek().text != word)
            fail(peek(), message + ", got '" + peek().text + "'");
        next();
    }

    // Index expressions evaluate to a set of concrete values when they
    // only involve constants and loop variables.
    struct IndexValues {
        bool known = false;
        std::set<int> values;
    };

    void statement() {
        if (at(Tok::Ident) && peek().text == "for") {
            for_loop();
            return;
        }
        const Token& name = expect(Tok::Ident, "expected a statement");
        IndexValues index;
        bool indexed = false;
        if (at(Tok::LBracket)) {
            indexed = true;
            next();
            index = index_expr(name);
            expect(Tok::RBracket, "expected ']'");
        }
        if (indexed) check_bounds(name, index);
        if (at(Tok::Tilde)) {
            if (in_data_) fail(peek(), "stochastic statement inside data block");
            next();
            record_sampled(name, indexed, index);
            distribution_call();
        } else if (at(Tok::Arrow)) {
            next();
            record_assigned(name, indexed, index);
            expression();
        } else {
            fail(peek(), "expected '<-' or '~'");
        }
        if (at(Tok::Semi)) next();
    }

    void for_loop() {
        if (in_data_) fail(peek(), "for loop inside data block");
        next();  // for
        expect(Tok::LParen, "expected '('");
        const Token& var = expect(Tok::Ident, "expected loop variable");
        expect_keyword("in", "expected 'in'");
        int lo = constant(expect(Tok::Number, "expected loop lower bound"));
        expect(Tok::Colon, "expected ':'");
        int hi = constant(expect(Tok::Number, "expected loop upper bound"));
        expect(Tok::RParen, "expected ')'");
        if (lo > hi) fail(peek(), "empty loop range " + std::to_string(lo) + ":" + std::to_string(hi));
        summary_.loop_bounds.push_back({lo, hi});
        if (loop_env_.count(var.text)) fail(var, "loop variable " + var.text + " shadows an outer loop");
        loop_env_[var.text] = {lo, hi};
        expect(Tok::LBrace, "expected '{'");
        while (!at(Tok::RBrace)) statement();
        expect(Tok::RBrace, "expected '}'");
        loop_env_.erase(var.text);
    }

    int constant(const Token& tok) { return std::stoi(tok.text); }

    void record_sampled(const Token& name, bool indexed, const IndexValues& index) {
        auto& use = summary_.sampled[name.text];
        use.name = name.text;
        std::vector<std::string> keys;
        if (!indexed) {
            keys.push_back(name.text);
        } else if (index.known) {
            for (int v : index.values) {
                use.indices.insert(v);
                keys.push_back(name.text + "[" + std::to_string(v) + "]");
            }
        } else {
            keys.push_back(name.text + "[?]");
        }
        for (const auto& key : keys)
            if (!sampled_keys_.insert(key).second)
                fail(name, "stochastic symbol " + key + " redeclared");
    }

    void record_assigned(const Token& name, bool indexed, const IndexValues& index) {
        if (in_data_) {
            summary_.data_declared.push_back(name.text);
            return;
        }
        auto& use = summary_.deterministic[name.text];
        use.name = name.text;
        if (indexed && index.known)
            use.indices.insert(index.values.begin(), index.values.end());
    }

    void distribution_call() {
        const Token& dist = expect(Tok::Ident, "expected a distribution");
        if (!kDistributions.count(dist.text))
            fail(dist, "distribution '" + dist.text + "' outside the emitted subset");
        std::size_t arity = dist.text == "ddirch" ? 1 : 2;
        expect(Tok::LParen, "expected '('");
        for (std::size_t i = 0; i < arity; ++i) {
            if (i > 0) expect(Tok::Comma, "expected ','");
            expression();
        }
        expect(Tok::RParen, "expected ')'");
    }

    void expression() {
        term();
        while (at(Tok::Plus) || at(Tok::Minus)) {
            next();
            term();
        }
    }

    void term() {
        factor();
        while (at(Tok::Slash)) {
            next();
            factor();
        }
    }

    void factor() {
        if (at(Tok::Number)) {
            next();
            return;
        }
        if (at(Tok::LParen)) {
            next();
            expression();
            expect(Tok::RParen, "expected ')'");
            return;
        }
        const Token& name = expect(Tok::Ident, "expected an operand");
        if (kFunctions.count(name.text) && at(Tok::LParen)) {
            next();
            expression();
            while (at(Tok::Comma)) {
                next();
                expression();
            }
            expect(Tok::RParen, "expected ')'");
            return;
        }
        reference(name);
    }

    void reference(const Token& name) {
        if (!loop_env_.count(name.text)) {
            summary_.referenced.insert(name.text);
            if (in_data_) summary_.data_parameters.push_back(name.text);
        }
        if (at(Tok::LBracket)) {
            next();
            IndexValues index = index_expr(name);
            if (at(Tok::Colon)) {  // range slice, e.g. sum(pZ[i:3])
                next();
                IndexValues upper = index_expr(name);
                check_bounds(name, upper);
            }
            check_bounds(name, index);
            expect(Tok::RBracket, "expected ']'");
        }
    }

    void check_bounds(const Token& at_tok, const IndexValues& index) {
        if (!index.known) return;
        for (int v : index.values)
            if (v < 1)
                fail(at_tok, "index " + std::to_string(v) + " out of declared loop bounds");
    }

    // Additive expression over constants and loop variables; loses track
    // (known=false) as soon as any other symbol participates.
    IndexValues index_expr(const Token& context) {
        IndexValues acc = index_term(context);
        while (at(Tok::Plus) || at(Tok::Minus)) {
            bool minus = at(Tok::Minus);
            next();
            IndexValues rhs = index_term(context);
            if (!acc.known || !rhs.known) {
                acc.known = false;
                continue;
            }
            std::set<int> combined;
            for (int a : acc.values)
                for (int b : rhs.values) combined.insert(minus ? a - b : a + b);
            acc.values = std::move(combined);
        }
        return acc;
    }

    IndexValues index_term(const Token& context) {
        IndexValues result;
        if (at(Tok::Number)) {
            result.known = true;
            result.values.insert(constant(next()));
            return result;
        }
        if (at(Tok::Ident)) {
            const Token& name = next();
            auto it = loop_env_.find(name.text);
            if (it != loop_env_.end()) {
                result.known = true;
                for (int v = it->second.first; v <= it->second.second; ++v)
                    result.values.insert(v);
                return result;
            }
            summary_.referenced.insert(name.text);
            return result;  // unknown symbol: cannot bound-check
        }
        fail(peek(), "expected an index expression");
    }
};

} // namespace

ParseSummary parse_generated_model(const std::string& text) {
    Parser parser(text);
    return parser.run();
}

} // namespace wmm::jags
