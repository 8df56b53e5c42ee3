#include "trop/rational.hpp"

#include <stdexcept>

namespace trop {

Q parse_rational(const std::string& raw) {
    std::string s;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        // U+2212 MINUS SIGN
        if (i + 2 < raw.size() + 0 && static_cast<unsigned char>(raw[i]) == 0xE2 &&
            static_cast<unsigned char>(raw[i + 1]) == 0x88 &&
            static_cast<unsigned char>(raw[i + 2]) == 0x92) {
            s.push_back('-');
            i += 2;
        } else if (raw[i] != ' ' && raw[i] != '+') {
            s.push_back(raw[i]);
        } else if (raw[i] == '+' && !s.empty() && (s.back() == 'e' || s.back() == 'E')) {
            s.push_back('+');
        }
    }
    if (s.empty()) throw std::invalid_argument("empty rational literal");

    auto slash = s.find('/');
    if (slash != std::string::npos) {
        Q q;
        if (q.set_str(s, 10) != 0) throw std::invalid_argument("bad rational literal: " + raw);
        if (q.get_den() == 0) throw std::invalid_argument("zero denominator: " + raw);
        q.canonicalize();
        return q;
    }

    bool neg = false;
    std::size_t pos = 0;
    if (s[0] == '-') { neg = true; pos = 1; }
    std::string mant, expo;
    auto e = s.find_first_of("eE", pos);
    mant = s.substr(pos, e == std::string::npos ? std::string::npos : e - pos);
    if (e != std::string::npos) expo = s.substr(e + 1);

    std::string digits;
    long frac = 0;
    bool seen_dot = false;
    for (char c : mant) {
        if (c == '.') {
            if (seen_dot) throw std::invalid_argument("bad decimal literal: " + raw);
            seen_dot = true;
        } else if (c >= '0' && c <= '9') {
            digits.push_back(c);
            if (seen_dot) ++frac;
        } else {
            throw std::invalid_argument("bad rational literal: " + raw);
        }
    }
    if (digits.empty()) throw std::invalid_argument("bad rational literal: " + raw);
    long ex = expo.empty() ? 0 : std::stol(expo);
    ex -= frac;
    mpz_class num(digits, 10);
    mpz_class ten = 10, p;
    mpz_pow_ui(p.get_mpz_t(), ten.get_mpz_t(), static_cast<unsigned long>(ex < 0 ? -ex : ex));
    Q q = ex >= 0 ? Q(num * p) : Q(num, p);
    q.canonicalize();
    return neg ? Q(-q) : q;
}

std::string to_string(const Q& q) { return q.get_str(); }

QC ipow(int k) {
    switch (((k % 4) + 4) % 4) {
        case 0: return {1, 0};
        case 1: return {0, 1};
        case 2: return {-1, 0};
        default: return {0, -1};
    }
}

std::string to_string(const QC& z) {
    if (z.im == 0) return z.re.get_str();
    if (z.re == 0) return z.im.get_str() + "i";
    return z.re.get_str() + (z.im > 0 ? "+" : "") + z.im.get_str() + "i";
}

}  // namespace trop
