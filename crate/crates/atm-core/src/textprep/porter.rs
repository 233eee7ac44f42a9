//! Porter suffix-stripping stemmer.
//!
//! Implements the algorithm exactly as published in 1980 (steps 1a
//! through 5b), without the later LOGI/BLI amendments that appeared in
//! some distributions. Per the reference implementation, words of one or
//! two letters are returned unchanged, and conditions (the measure `m`,
//! `*v*`, `*d`, `*o`) are evaluated on the stem that remains once the
//! candidate suffix is removed.
//!
//! The stemmer operates on ASCII lowercase letters; tokens containing
//! anything else pass through untouched.

struct Stemmer {
    b: Vec<u8>,
    /// Length of the live word prefix in `b`.
    k: usize,
    /// Length of the stem against which conditions are evaluated.
    j: usize,
}

/// Stems a lowercase alphabetic token. Non-ASCII-alphabetic input is
/// returned as-is.
pub fn stem(token: &str) -> String {
    if token.len() <= 2 || !token.bytes().all(|c| c.is_ascii_lowercase()) {
        return token.to_string();
    }
    let mut s = Stemmer {
        b: token.as_bytes().to_vec(),
        k: token.len(),
        j: 0,
    };
    s.step1a();
    s.step1b();
    s.step1c();
    s.step2();
    s.step3();
    s.step4();
    s.step5a();
    s.step5b();
    s.b.truncate(s.k);
    String::from_utf8(s.b).expect("ascii")
}

impl Stemmer {
    fn is_consonant(&self, i: usize) -> bool {
        match self.b[i] {
            b'a' | b'e' | b'i' | b'o' | b'u' => false,
            b'y' => {
                if i == 0 {
                    true
                } else {
                    !self.is_consonant(i - 1)
                }
            }
            _ => true,
        }
    }

    /// Measure of b[0..self.j]: the `m` in [C](VC)^m[V].
    fn measure(&self) -> usize {
        let mut i = 0;
        let n = self.j;
        let mut m = 0;
        while i < n && self.is_consonant(i) {
            i += 1;
        }
        loop {
            while i < n && !self.is_consonant(i) {
                i += 1;
            }
            if i >= n {
                return m;
            }
            m += 1;
            while i < n && self.is_consonant(i) {
                i += 1;
            }
        }
    }

    /// `*v*`: the stem b[0..self.j] contains a vowel.
    fn has_vowel(&self) -> bool {
        (0..self.j).any(|i| !self.is_consonant(i))
    }

    /// `*d`: b[0..len] ends with a double consonant.
    fn ends_double_consonant(&self, len: usize) -> bool {
        len >= 2 && self.b[len - 1] == self.b[len - 2] && self.is_consonant(len - 1)
    }

    /// `*o`: b[0..len] ends consonant-vowel-consonant where the final
    /// consonant is not w, x, or y.
    fn ends_cvc(&self, len: usize) -> bool {
        if len < 3 {
            return false;
        }
        if !self.is_consonant(len - 3) || self.is_consonant(len - 2) || !self.is_consonant(len - 1)
        {
            return false;
        }
        !matches!(self.b[len - 1], b'w' | b'x' | b'y')
    }

    /// If the live word ends with `suffix`, records the stem length in
    /// `self.j` and returns true.
    fn ends(&mut self, suffix: &[u8]) -> bool {
        if suffix.len() > self.k {
            return false;
        }
        if &self.b[self.k - suffix.len()..self.k] == suffix {
            self.j = self.k - suffix.len();
            true
        } else {
            false
        }
    }

    /// Replaces the matched suffix with `rep` (word becomes stem + rep).
    fn set_to(&mut self, rep: &[u8]) {
        self.b.truncate(self.j);
        self.b.extend_from_slice(rep);
        self.k = self.b.len();
    }

    /// Applies the first rule whose suffix matches; gated on m(stem) > 0.
    /// No fallthrough to shorter suffixes once one matches.
    fn apply_rules(&mut self, rules: &[(&[u8], &[u8])]) {
        for (suffix, rep) in rules {
            if self.ends(suffix) {
                if self.measure() > 0 {
                    self.set_to(rep);
                }
                return;
            }
        }
    }

    // SSES -> SS, IES -> I, SS -> SS, S -> ε
    fn step1a(&mut self) {
        if self.ends(b"sses") {
            self.k -= 2;
        } else if self.ends(b"ies") {
            self.set_to(b"i");
        } else if !self.ends(b"ss") && self.ends(b"s") {
            self.k -= 1;
        }
        self.b.truncate(self.k);
    }

    fn step1b(&mut self) {
        if self.ends(b"eed") {
            if self.measure() > 0 {
                self.k -= 1;
                self.b.truncate(self.k);
            }
            return;
        }
        let stripped = (self.ends(b"ed") || self.ends(b"ing")) && self.has_vowel();
        if !stripped {
            return;
        }
        self.k = self.j;
        self.b.truncate(self.k);
        if self.ends(b"at") || self.ends(b"bl") || self.ends(b"iz") {
            self.b.push(b'e');
            self.k += 1;
        } else if self.ends_double_consonant(self.k)
            && !matches!(self.b[self.k - 1], b'l' | b's' | b'z')
        {
            self.k -= 1;
            self.b.truncate(self.k);
        } else {
            self.j = self.k;
            if self.measure() == 1 && self.ends_cvc(self.k) {
                self.b.push(b'e');
                self.k += 1;
            }
        }
    }

    // (*v*) Y -> I
    fn step1c(&mut self) {
        if self.ends(b"y") && self.has_vowel() {
            self.b[self.k - 1] = b'i';
        }
    }

    fn step2(&mut self) {
        // Longest suffixes first; original 1980 table (ABLI -> ABLE, no LOGI).
        const RULES: &[(&[u8], &[u8])] = &[
            (b"ational", b"ate"),
            (b"ization", b"ize"),
            (b"iveness", b"ive"),
            (b"fulness", b"ful"),
            (b"ousness", b"ous"),
            (b"tional", b"tion"),
            (b"biliti", b"ble"),
            (b"entli", b"ent"),
            (b"ousli", b"ous"),
            (b"ation", b"ate"),
            (b"alism", b"al"),
            (b"aliti", b"al"),
            (b"iviti", b"ive"),
            (b"enci", b"ence"),
            (b"anci", b"ance"),
            (b"izer", b"ize"),
            (b"abli", b"able"),
            (b"alli", b"al"),
            (b"ator", b"ate"),
            (b"eli", b"e"),
        ];
        self.apply_rules(RULES);
    }

    fn step3(&mut self) {
        const RULES: &[(&[u8], &[u8])] = &[
            (b"icate", b"ic"),
            (b"ative", b""),
            (b"alize", b"al"),
            (b"iciti", b"ic"),
            (b"ical", b"ic"),
            (b"ful", b""),
            (b"ness", b""),
        ];
        self.apply_rules(RULES);
    }

    fn step4(&mut self) {
        const SUFFIXES: &[&[u8]] = &[
            b"ement", b"ance", b"ence", b"able", b"ible", b"ment", b"ant", b"ent", b"ion",
            b"ism", b"ate", b"iti", b"ous", b"ive", b"ize", b"al", b"er", b"ic", b"ou",
        ];
        for suffix in SUFFIXES {
            if self.ends(suffix) {
                let ion_ok = *suffix != b"ion"
                    || (self.j >= 1 && matches!(self.b[self.j - 1], b's' | b't'));
                if self.measure() > 1 && ion_ok {
                    self.k = self.j;
                    self.b.truncate(self.k);
                }
                return;
            }
        }
    }

    // (m>1) E -> ε ; (m=1 and not *o) E -> ε
    fn step5a(&mut self) {
        if self.b[self.k - 1] == b'e' {
            self.j = self.k - 1;
            let m = self.measure();
            if m > 1 || (m == 1 && !self.ends_cvc(self.k - 1)) {
                self.k -= 1;
                self.b.truncate(self.k);
            }
        }
    }

    // (m>1 and *d and *L) -> single letter
    fn step5b(&mut self) {
        self.j = self.k;
        if self.b[self.k - 1] == b'l' && self.ends_double_consonant(self.k) && self.measure() > 1 {
            self.k -= 1;
            self.b.truncate(self.k);
        }
    }
}
