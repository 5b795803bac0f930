//! Free-group word algebra for surface and free presentations.
//!
//! Words are stored freely reduced over the generators of a presentation:
//! `a1,b1,...,ag,bg` for a closed surface of genus `g`, `x1,...,xr` for a
//! free group of rank `r`. Token syntax for I/O is whitespace separated,
//! lowercase for generators and uppercase for inverses (`"a1 b2 A1"`).

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Errors from word parsing, presentation construction, and the
/// automorphism library.
#[derive(Debug, Error)]
pub enum WordError {
    #[error("cannot parse word token `{0}`")]
    BadToken(String),
    #[error("generator index {index} out of range for presentation with {count} generators")]
    GeneratorOutOfRange { index: usize, count: usize },
    #[error("surface presentations require genus >= 2 (got {0})")]
    GenusTooSmall(usize),
    #[error("free presentations require rank >= 1 (got {0})")]
    RankTooSmall(usize),
    #[error("nielsen moves require rank >= 2 (got {0})")]
    NielsenRankTooSmall(usize),
    #[error("modulus mismatch: {0} vs {1}")]
    ModulusMismatch(u32, u32),
    #[error("coordinate length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("modulus must be >= 2 (got {0})")]
    ModulusTooSmall(u32),
    #[error("automorphism `{label}` is not invertible: {reason}")]
    NotInvertible { label: String, reason: String },
    #[error("automorphism has {images} images but presentation has {generators} generators")]
    ImageCountMismatch { images: usize, generators: usize },
}

/// One letter of a word: a generator index and whether it is inverted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Letter {
    pub index: usize,
    pub inverse: bool,
}

impl Letter {
    pub fn new(index: usize, inverse: bool) -> Self {
        Letter { index, inverse }
    }

    pub fn inverted(self) -> Self {
        Letter {
            index: self.index,
            inverse: !self.inverse,
        }
    }

    fn cancels(self, other: Letter) -> bool {
        self.index == other.index && self.inverse != other.inverse
    }
}

/// A freely reduced word in the generators of a presentation.
///
/// The empty word is the identity. All constructors reduce, so adjacent
/// inverse pairs never survive.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Word {
    letters: Vec<Letter>,
}

impl Word {
    pub fn identity() -> Self {
        Word { letters: Vec::new() }
    }

    /// Builds a word from raw letters, cancelling adjacent inverse pairs
    /// until the result is freely reduced.
    pub fn from_letters<I: IntoIterator<Item = Letter>>(letters: I) -> Self {
        let mut reduced: Vec<Letter> = Vec::new();
        for letter in letters {
            match reduced.last() {
                Some(&top) if top.cancels(letter) => {
                    reduced.pop();
                }
                _ => reduced.push(letter),
            }
        }
        Word { letters: reduced }
    }

    pub fn generator(index: usize) -> Self {
        Word {
            letters: vec![Letter::new(index, false)],
        }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn inverse(&self) -> Word {
        Word {
            letters: self.letters.iter().rev().map(|l| l.inverted()).collect(),
        }
    }

    /// Product `self * other`, reduced at the seam.
    pub fn concat(&self, other: &Word) -> Word {
        Word::from_letters(self.letters.iter().chain(other.letters.iter()).copied())
    }

    /// Commutator `[self, other] = self other self^-1 other^-1`.
    pub fn commutator(&self, other: &Word) -> Word {
        self.concat(other)
            .concat(&self.inverse())
            .concat(&other.inverse())
    }

    /// Strips conjugating pairs `x w x^-1 -> w` until the word is
    /// cyclically reduced.
    pub fn cyclically_reduced(&self) -> Word {
        let mut letters = self.letters.clone();
        while letters.len() >= 2 && letters[0].cancels(*letters.last().unwrap()) {
            letters.pop();
            letters.remove(0);
        }
        Word { letters }
    }

    /// True if `self` and `other` are conjugate as cyclic words; both are
    /// cyclically reduced first, then compared over all rotations.
    pub fn conjugate_to(&self, other: &Word) -> bool {
        let a = self.cyclically_reduced();
        let b = other.cyclically_reduced();
        if a.len() != b.len() {
            return false;
        }
        if a.is_identity() {
            return true;
        }
        (0..a.len()).any(|shift| {
            (0..a.len()).all(|k| a.letters[k] == b.letters[(k + shift) % b.len()])
        })
    }

    /// Signed exponent sum per generator (the abelianized image in Z^k).
    pub fn exponent_sums(&self, generators: usize) -> Vec<i64> {
        let mut sums = vec![0i64; generators];
        for l in &self.letters {
            sums[l.index] += if l.inverse { -1 } else { 1 };
        }
        sums
    }

    pub fn max_index(&self) -> Option<usize> {
        self.letters.iter().map(|l| l.index).max()
    }
}

/// Freely reduces a raw letter sequence. Idempotent and
/// length-nonincreasing; validates indices against the presentation.
pub fn free_reduce(letters: &[Letter], presentation: &Presentation) -> Result<Word, WordError> {
    let count = presentation.generator_count();
    for l in letters {
        if l.index >= count {
            return Err(WordError::GeneratorOutOfRange {
                index: l.index,
                count,
            });
        }
    }
    Ok(Word::from_letters(letters.iter().copied()))
}

/// The presentation the words live over: a closed surface group of genus
/// `g >= 2` with relator `prod [a_i, b_i]`, or a free group of rank `r`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Presentation {
    Surface { genus: usize },
    Free { rank: usize },
}

impl Presentation {
    /// Genus 1 and below carry no irreducible representations and
    /// degenerate the cohomology, so they are rejected outright.
    pub fn surface(genus: usize) -> Result<Self, WordError> {
        if genus < 2 {
            return Err(WordError::GenusTooSmall(genus));
        }
        Ok(Presentation::Surface { genus })
    }

    pub fn free(rank: usize) -> Result<Self, WordError> {
        if rank < 1 {
            return Err(WordError::RankTooSmall(rank));
        }
        Ok(Presentation::Free { rank })
    }

    pub fn is_surface(&self) -> bool {
        matches!(self, Presentation::Surface { .. })
    }

    pub fn generator_count(&self) -> usize {
        match self {
            Presentation::Surface { genus } => 2 * genus,
            Presentation::Free { rank } => *rank,
        }
    }

    /// The surface relator, or `None` in free mode.
    pub fn relator(&self) -> Option<Word> {
        match self {
            Presentation::Surface { genus } => Some(surface_relator(*genus).expect("genus >= 2")),
            Presentation::Free { .. } => None,
        }
    }

    /// Generator index for `a_i` (surface numbering is `a1 b1 a2 b2 ...`).
    pub fn a(&self, i: usize) -> usize {
        debug_assert!(self.is_surface());
        2 * (i - 1)
    }

    /// Generator index for `b_i`.
    pub fn b(&self, i: usize) -> usize {
        debug_assert!(self.is_surface());
        2 * (i - 1) + 1
    }

    pub fn generator_name(&self, index: usize) -> String {
        match self {
            Presentation::Surface { .. } => {
                let handle = index / 2 + 1;
                if index % 2 == 0 {
                    format!("a{handle}")
                } else {
                    format!("b{handle}")
                }
            }
            Presentation::Free { .. } => format!("x{}", index + 1),
        }
    }

    fn letter_token(&self, letter: Letter) -> String {
        let name = self.generator_name(letter.index);
        if letter.inverse {
            name.to_uppercase()
        } else {
            name
        }
    }

    fn parse_token(&self, token: &str) -> Result<Letter, WordError> {
        let mut chars = token.chars();
        let head = chars.next().ok_or_else(|| WordError::BadToken(token.into()))?;
        let number: usize = chars
            .as_str()
            .parse()
            .map_err(|_| WordError::BadToken(token.into()))?;
        if number == 0 {
            return Err(WordError::BadToken(token.into()));
        }
        let inverse = head.is_ascii_uppercase();
        let index = match (self, head.to_ascii_lowercase()) {
            (Presentation::Surface { .. }, 'a') => 2 * (number - 1),
            (Presentation::Surface { .. }, 'b') => 2 * (number - 1) + 1,
            (Presentation::Free { .. }, 'x') => number - 1,
            _ => return Err(WordError::BadToken(token.into())),
        };
        let count = self.generator_count();
        if index >= count {
            return Err(WordError::GeneratorOutOfRange { index, count });
        }
        Ok(Letter::new(index, inverse))
    }

    /// Parses whitespace-separated tokens into a freely reduced word.
    pub fn parse_word(&self, text: &str) -> Result<Word, WordError> {
        let letters: Vec<Letter> = text
            .split_whitespace()
            .map(|tok| self.parse_token(tok))
            .collect::<Result<_, _>>()?;
        Ok(Word::from_letters(letters))
    }

    /// Round-trips with `parse_word`; the identity prints as `""`.
    pub fn format_word(&self, word: &Word) -> String {
        word.letters
            .iter()
            .map(|&l| self.letter_token(l))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl fmt::Display for Presentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Presentation::Surface { genus } => write!(f, "surface genus {genus}"),
            Presentation::Free { rank } => write!(f, "free rank {rank}"),
        }
    }
}

/// The genus-`g` surface relator `a1 b1 a1^-1 b1^-1 ... ag bg ag^-1 bg^-1`,
/// length `4g`.
pub fn surface_relator(genus: usize) -> Result<Word, WordError> {
    if genus < 2 {
        return Err(WordError::GenusTooSmall(genus));
    }
    let mut word = Word::identity();
    for i in 1..=genus {
        let a = Word::generator(2 * (i - 1));
        let b = Word::generator(2 * (i - 1) + 1);
        word = word.concat(&a.commutator(&b));
    }
    Ok(word)
}

/// Mod-n homology class of a loop tuple: exponent sums per generator,
/// reduced to `0..n-1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomologyClass {
    pub coords: Vec<u32>,
    pub modulus: u32,
}

impl HomologyClass {
    pub fn zero(generators: usize, modulus: u32) -> Self {
        HomologyClass {
            coords: vec![0; generators],
            modulus,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    pub fn add(&self, other: &HomologyClass) -> Result<HomologyClass, WordError> {
        if self.modulus != other.modulus {
            return Err(WordError::ModulusMismatch(self.modulus, other.modulus));
        }
        if self.coords.len() != other.coords.len() {
            return Err(WordError::LengthMismatch(
                self.coords.len(),
                other.coords.len(),
            ));
        }
        Ok(HomologyClass {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(&a, &b)| (a + b) % self.modulus)
                .collect(),
            modulus: self.modulus,
        })
    }
}

/// Total mod-n homology class `[gamma_1] + ... + [gamma_s]` of a tuple of
/// loops.
pub fn total_homology_class(
    loops: &[Word],
    generators: usize,
    modulus: u32,
) -> Result<HomologyClass, WordError> {
    if modulus < 2 {
        return Err(WordError::ModulusTooSmall(modulus));
    }
    let mut sums = vec![0i64; generators];
    for word in loops {
        if let Some(max) = word.max_index() {
            if max >= generators {
                return Err(WordError::GeneratorOutOfRange {
                    index: max,
                    count: generators,
                });
            }
        }
        for (acc, s) in sums.iter_mut().zip(word.exponent_sums(generators)) {
            *acc += s;
        }
    }
    let m = modulus as i64;
    Ok(HomologyClass {
        coords: sums.iter().map(|&s| (s.rem_euclid(m)) as u32).collect(),
        modulus,
    })
}

/// A homomorphism `pi -> Z/n`, i.e. one residue per generator. Well
/// defined on the surface group because the relator is a product of
/// commutators.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CenterCharacter {
    pub coords: Vec<u32>,
    pub modulus: u32,
}

impl CenterCharacter {
    pub fn zero(generators: usize, modulus: u32) -> Self {
        CenterCharacter {
            coords: vec![0; generators],
            modulus,
        }
    }

    pub fn new(coords: Vec<u32>, modulus: u32) -> Self {
        CenterCharacter {
            coords: coords.iter().map(|&c| c % modulus).collect(),
            modulus,
        }
    }

    pub fn add(&self, other: &CenterCharacter) -> Result<CenterCharacter, WordError> {
        if self.modulus != other.modulus {
            return Err(WordError::ModulusMismatch(self.modulus, other.modulus));
        }
        if self.coords.len() != other.coords.len() {
            return Err(WordError::LengthMismatch(
                self.coords.len(),
                other.coords.len(),
            ));
        }
        Ok(CenterCharacter {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(&a, &b)| (a + b) % self.modulus)
                .collect(),
            modulus: self.modulus,
        })
    }

    /// Enumerates all `n^k` characters. Intended for small `n^k` only.
    pub fn enumerate(generators: usize, modulus: u32) -> Vec<CenterCharacter> {
        let total = (modulus as u64).pow(generators as u32);
        (0..total)
            .map(|mut code| {
                let coords = (0..generators)
                    .map(|_| {
                        let c = (code % modulus as u64) as u32;
                        code /= modulus as u64;
                        c
                    })
                    .collect();
                CenterCharacter {
                    coords,
                    modulus,
                }
            })
            .collect()
    }
}

/// Natural pairing `sum_j u_j c_j mod n`; the evaluation `u(gamma)` as a
/// root of unity is `zeta^pair_character(u, [gamma])`.
pub fn pair_character(u: &CenterCharacter, c: &HomologyClass) -> Result<u32, WordError> {
    if u.modulus != c.modulus {
        return Err(WordError::ModulusMismatch(u.modulus, c.modulus));
    }
    if u.coords.len() != c.coords.len() {
        return Err(WordError::LengthMismatch(u.coords.len(), c.coords.len()));
    }
    let m = u.modulus as u64;
    let sum: u64 = u
        .coords
        .iter()
        .zip(&c.coords)
        .map(|(&a, &b)| (a as u64 * b as u64) % m)
        .sum();
    Ok((sum % m) as u32)
}

/// A free-group automorphism stored together with its inverse, as images
/// of the generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Automorphism {
    label: String,
    images: Vec<Word>,
    inverse_images: Vec<Word>,
}

impl Automorphism {
    /// Builds an automorphism from generator images and the images of its
    /// inverse; fails unless the two substitution maps compose to the
    /// identity in both orders.
    pub fn new(
        label: impl Into<String>,
        images: Vec<Word>,
        inverse_images: Vec<Word>,
    ) -> Result<Self, WordError> {
        let label = label.into();
        if images.len() != inverse_images.len() {
            return Err(WordError::ImageCountMismatch {
                images: images.len(),
                generators: inverse_images.len(),
            });
        }
        let phi = Automorphism {
            label: label.clone(),
            images,
            inverse_images,
        };
        for (j, check) in [
            (0..phi.images.len())
                .map(|j| phi.apply(&phi.apply_inverse(&Word::generator(j))))
                .collect::<Vec<_>>(),
            (0..phi.images.len())
                .map(|j| phi.apply_inverse(&phi.apply(&Word::generator(j))))
                .collect::<Vec<_>>(),
        ]
        .concat()
        .into_iter()
        .enumerate()
        {
            if check != Word::generator(j % phi.images.len()) {
                return Err(WordError::NotInvertible {
                    label,
                    reason: format!(
                        "composition with the declared inverse moves generator {}",
                        j % phi.images.len()
                    ),
                });
            }
        }
        Ok(phi)
    }

    pub fn identity(generators: usize) -> Self {
        let images: Vec<Word> = (0..generators).map(Word::generator).collect();
        Automorphism {
            label: "identity".into(),
            images: images.clone(),
            inverse_images: images,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn generator_count(&self) -> usize {
        self.images.len()
    }

    pub fn image(&self, index: usize) -> &Word {
        &self.images[index]
    }

    pub fn inverse_image(&self, index: usize) -> &Word {
        &self.inverse_images[index]
    }

    pub fn inverse(&self) -> Automorphism {
        Automorphism {
            label: format!("{}^-1", self.label),
            images: self.inverse_images.clone(),
            inverse_images: self.images.clone(),
        }
    }

    fn substitute(images: &[Word], word: &Word) -> Word {
        let mut letters = Vec::new();
        for l in word.letters() {
            let image = &images[l.index];
            if l.inverse {
                letters.extend(image.inverse().letters().iter().copied());
            } else {
                letters.extend(image.letters().iter().copied());
            }
        }
        Word::from_letters(letters)
    }

    /// Applies the automorphism by substitution and free reduction.
    pub fn apply(&self, word: &Word) -> Word {
        Self::substitute(&self.images, word)
    }

    pub fn apply_inverse(&self, word: &Word) -> Word {
        Self::substitute(&self.inverse_images, word)
    }

    /// `self . other` applied as `apply(self, apply(other, w))`.
    pub fn compose(&self, other: &Automorphism) -> Automorphism {
        Automorphism {
            label: format!("{}.{}", self.label, other.label),
            images: other.images.iter().map(|w| self.apply(w)).collect(),
            inverse_images: self
                .inverse_images
                .iter()
                .map(|w| other.apply_inverse(w))
                .collect(),
        }
    }

    /// Integer abelianization matrix (column `j` = exponent sums of the
    /// image of generator `j`).
    pub fn abelianized(&self) -> Vec<Vec<i64>> {
        let k = self.images.len();
        (0..k)
            .map(|j| self.images[j].exponent_sums(k))
            .collect()
    }
}

/// Result of checking an automorphism against a presentation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AutomorphismReport {
    pub relator_ok: bool,
    pub invertible_ok: bool,
}

impl AutomorphismReport {
    pub fn all_ok(&self) -> bool {
        self.relator_ok && self.invertible_ok
    }
}

/// Checks that the declared inverse really inverts, and (surface kind)
/// that the relator maps to a conjugate of itself or of its inverse.
/// Comparison is exact on reduced words.
pub fn verify_automorphism(phi: &Automorphism, presentation: &Presentation) -> AutomorphismReport {
    let k = presentation.generator_count();
    let invertible_ok = phi.generator_count() == k
        && (0..k).all(|j| {
            phi.apply_inverse(&phi.apply(&Word::generator(j))) == Word::generator(j)
                && phi.apply(&phi.apply_inverse(&Word::generator(j))) == Word::generator(j)
        });
    let relator_ok = match presentation.relator() {
        Some(relator) => {
            let image = phi.apply(&relator);
            image.conjugate_to(&relator) || image.conjugate_to(&relator.inverse())
        }
        None => true,
    };
    AutomorphismReport {
        relator_ok,
        invertible_ok,
    }
}

/// The 2g handle-twist generators: `T_{a_i}: b_i -> b_i a_i` and
/// `T_{b_i}: a_i -> a_i b_i`, all other generators fixed. Each fixes the
/// surface relator letter for letter.
pub fn mcg_generators(genus: usize) -> Result<Vec<Automorphism>, WordError> {
    if genus < 2 {
        return Err(WordError::GenusTooSmall(genus));
    }
    let k = 2 * genus;
    let mut out = Vec::with_capacity(k);
    for i in 1..=genus {
        let a = 2 * (i - 1);
        let b = a + 1;
        // T_{a_i}: b_i -> b_i a_i, inverse b_i -> b_i a_i^-1.
        let mut images: Vec<Word> = (0..k).map(Word::generator).collect();
        let mut inverses = images.clone();
        images[b] = Word::generator(b).concat(&Word::generator(a));
        inverses[b] = Word::generator(b).concat(&Word::generator(a).inverse());
        out.push(Automorphism::new(format!("twist-a{i}"), images, inverses)?);
        // T_{b_i}: a_i -> a_i b_i, inverse a_i -> a_i b_i^-1.
        let mut images: Vec<Word> = (0..k).map(Word::generator).collect();
        let mut inverses = images.clone();
        images[a] = Word::generator(a).concat(&Word::generator(b));
        inverses[a] = Word::generator(a).concat(&Word::generator(b).inverse());
        out.push(Automorphism::new(format!("twist-b{i}"), images, inverses)?);
    }
    Ok(out)
}

/// Nielsen moves on a free group: inversions `x_i -> x_i^-1`, shears
/// `x_i -> x_i x_j` for ordered pairs `i != j`, and transpositions.
pub fn nielsen_generators(rank: usize) -> Result<Vec<Automorphism>, WordError> {
    if rank < 2 {
        return Err(WordError::NielsenRankTooSmall(rank));
    }
    let mut out = Vec::new();
    for i in 0..rank {
        let mut images: Vec<Word> = (0..rank).map(Word::generator).collect();
        images[i] = Word::generator(i).inverse();
        out.push(Automorphism::new(
            format!("nielsen-inv-{}", i + 1),
            images.clone(),
            images,
        )?);
    }
    for i in 0..rank {
        for j in 0..rank {
            if i == j {
                continue;
            }
            let mut images: Vec<Word> = (0..rank).map(Word::generator).collect();
            let mut inverses = images.clone();
            images[i] = Word::generator(i).concat(&Word::generator(j));
            inverses[i] = Word::generator(i).concat(&Word::generator(j).inverse());
            out.push(Automorphism::new(
                format!("nielsen-shear-{}{}", i + 1, j + 1),
                images,
                inverses,
            )?);
        }
    }
    for i in 0..rank {
        for j in (i + 1)..rank {
            let mut images: Vec<Word> = (0..rank).map(Word::generator).collect();
            images.swap(i, j);
            out.push(Automorphism::new(
                format!("nielsen-swap-{}{}", i + 1, j + 1),
                images.clone(),
                images,
            )?);
        }
    }
    Ok(out)
}

/// Determinant of an integer matrix by fraction-free elimination.
/// Used to certify that abelianized automorphisms lie in GL(k, Z).
pub fn integer_determinant(matrix: &[Vec<i64>]) -> i128 {
    let k = matrix.len();
    if k == 0 {
        return 1;
    }
    let mut m: Vec<Vec<i128>> = matrix
        .iter()
        .map(|row| row.iter().map(|&x| x as i128).collect())
        .collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for pivot in 0..k - 1 {
        if m[pivot][pivot] == 0 {
            let swap = (pivot + 1..k).find(|&r| m[r][pivot] != 0);
            match swap {
                Some(r) => {
                    m.swap(pivot, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for r in pivot + 1..k {
            for c in pivot + 1..k {
                m[r][c] = (m[pivot][pivot] * m[r][c] - m[r][pivot] * m[pivot][c]) / prev;
            }
            m[r][pivot] = 0;
        }
        prev = m[pivot][pivot];
    }
    sign * m[k - 1][k - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn genus2() -> Presentation {
        Presentation::surface(2).unwrap()
    }

    #[test]
    fn free_reduce_cancels_adjacent_pairs() {
        let p = genus2();
        let w = p.parse_word("a1 A1").unwrap();
        assert!(w.is_identity());
        let w = p.parse_word("a1 b1 B1 a1").unwrap();
        assert_eq!(p.format_word(&w), "a1 a1");
        let w = p.parse_word("a1 b2").unwrap();
        assert_eq!(p.format_word(&w), "a1 b2");
    }

    #[test]
    fn free_reduce_is_idempotent_and_validates_indices() {
        let p = genus2();
        let raw = [
            Letter::new(0, false),
            Letter::new(1, false),
            Letter::new(1, true),
        ];
        let once = free_reduce(&raw, &p).unwrap();
        let twice = free_reduce(once.letters(), &p).unwrap();
        assert_eq!(once, twice);
        assert!(once.len() <= raw.len());
        let bad = [Letter::new(7, false)];
        assert!(matches!(
            free_reduce(&bad, &p),
            Err(WordError::GeneratorOutOfRange { .. })
        ));
    }

    #[test]
    fn surface_relator_shape() {
        let r2 = surface_relator(2).unwrap();
        assert_eq!(r2.len(), 8);
        let p = genus2();
        assert_eq!(p.format_word(&r2), "a1 b1 A1 B1 a2 b2 A2 B2");
        assert_eq!(surface_relator(3).unwrap().len(), 12);
        assert!(matches!(surface_relator(1), Err(WordError::GenusTooSmall(1))));
    }

    #[test]
    fn parse_rejects_bad_tokens() {
        let p = genus2();
        assert!(p.parse_word("a1 c2").is_err());
        assert!(p.parse_word("a0").is_err());
        assert!(p.parse_word("a3").is_err()); // genus 2 has a1, a2 only
        let f = Presentation::free(2).unwrap();
        assert!(f.parse_word("a1").is_err());
        assert!(f.parse_word("x2 X1").is_ok());
    }

    #[test]
    fn word_roundtrip_through_tokens() {
        let p = genus2();
        let w = p.parse_word("a1 b1 A2 B1 a2").unwrap();
        assert_eq!(p.parse_word(&p.format_word(&w)).unwrap(), w);
    }

    #[test]
    fn total_class_examples() {
        let p = genus2();
        let a1 = p.parse_word("a1").unwrap();
        let c = total_homology_class(&[a1.clone()], 4, 2).unwrap();
        assert_eq!(c.coords, vec![1, 0, 0, 0]);

        let comm = p.parse_word("a1 b1 A1 B1").unwrap();
        let c = total_homology_class(&[comm], 4, 5).unwrap();
        assert!(c.is_zero());

        let c = total_homology_class(&[a1.clone(), a1], 4, 2).unwrap();
        assert!(c.is_zero());
    }

    #[test]
    fn total_class_is_additive_over_concatenated_tuples() {
        let p = genus2();
        let gamma = [p.parse_word("a1 b2").unwrap(), p.parse_word("A2").unwrap()];
        let delta = [p.parse_word("b1 b1 a1").unwrap()];
        let both: Vec<Word> = gamma.iter().chain(delta.iter()).cloned().collect();
        let n = 3;
        let lhs = total_homology_class(&both, 4, n).unwrap();
        let rhs = total_homology_class(&gamma, 4, n)
            .unwrap()
            .add(&total_homology_class(&delta, 4, n).unwrap())
            .unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn pair_character_examples() {
        let u = CenterCharacter::new(vec![1, 0, 0, 0], 2);
        let c = HomologyClass {
            coords: vec![1, 0, 0, 0],
            modulus: 2,
        };
        assert_eq!(pair_character(&u, &c).unwrap(), 1);

        let zero = HomologyClass::zero(4, 2);
        assert_eq!(pair_character(&u, &zero).unwrap(), 0);

        let u = CenterCharacter::new(vec![1, 1], 2);
        let c = HomologyClass {
            coords: vec![1, 1],
            modulus: 2,
        };
        assert_eq!(pair_character(&u, &c).unwrap(), 0);

        let mismatched = HomologyClass {
            coords: vec![1, 1],
            modulus: 3,
        };
        assert!(pair_character(&u, &mismatched).is_err());
    }

    #[test]
    fn mcg_generator_count_and_images() {
        let twists = mcg_generators(2).unwrap();
        assert_eq!(twists.len(), 4);
        let p = genus2();
        let t_a1 = &twists[0];
        assert_eq!(t_a1.label(), "twist-a1");
        let b1 = p.parse_word("b1").unwrap();
        assert_eq!(p.format_word(&t_a1.apply(&b1)), "b1 a1");
        assert_eq!(p.format_word(&t_a1.apply_inverse(&b1)), "b1 A1");
        assert!(mcg_generators(1).is_err());
    }

    // Symbolic oracle: expanding [a1, b1 a1] through free reduction must
    // return the relator letter for letter.
    #[test]
    fn handle_twists_fix_relator_exactly() {
        for genus in [2usize, 3] {
            let relator = surface_relator(genus).unwrap();
            for phi in mcg_generators(genus).unwrap() {
                assert_eq!(
                    phi.apply(&relator),
                    relator,
                    "{} must fix the relator",
                    phi.label()
                );
            }
        }
    }

    #[test]
    fn verify_automorphism_reports() {
        let p = genus2();
        for phi in mcg_generators(2).unwrap() {
            let report = verify_automorphism(&phi, &p);
            assert!(report.all_ok(), "{} failed verification", phi.label());
        }
        let report = verify_automorphism(&Automorphism::identity(4), &p);
        assert!(report.all_ok());

        // a1 -> a1^2 is not an automorphism of the free group; the declared
        // "inverse" cannot undo it.
        let mut images: Vec<Word> = (0..4).map(Word::generator).collect();
        images[0] = Word::generator(0).concat(&Word::generator(0));
        let bogus = Automorphism {
            label: "square-a1".into(),
            images,
            inverse_images: (0..4).map(Word::generator).collect(),
        };
        let report = verify_automorphism(&bogus, &p);
        assert!(!report.invertible_ok);
    }

    #[test]
    fn automorphism_constructor_rejects_bad_inverse() {
        let mut images: Vec<Word> = (0..4).map(Word::generator).collect();
        images[0] = Word::generator(0).concat(&Word::generator(0));
        let err = Automorphism::new("square-a1", images, (0..4).map(Word::generator).collect());
        assert!(matches!(err, Err(WordError::NotInvertible { .. })));
    }

    #[test]
    fn nielsen_generator_count_and_examples() {
        let moves = nielsen_generators(2).unwrap();
        assert!(moves.len() >= 5);
        assert_eq!(moves.len(), 2 + 2 + 1);
        let f = Presentation::free(2).unwrap();
        let shear = moves
            .iter()
            .find(|m| m.label() == "nielsen-shear-12")
            .unwrap();
        let x1 = f.parse_word("x1").unwrap();
        assert_eq!(f.format_word(&shear.apply(&x1)), "x1 x2");
        let inv = moves
            .iter()
            .find(|m| m.label() == "nielsen-inv-1")
            .unwrap();
        let twice = inv.compose(inv);
        for j in 0..2 {
            assert_eq!(twice.apply(&Word::generator(j)), Word::generator(j));
        }
        assert!(nielsen_generators(1).is_err());
    }

    #[test]
    fn apply_automorphism_examples() {
        let p = genus2();
        let twists = mcg_generators(2).unwrap();
        let t_a1 = &twists[0];
        let id = Automorphism::identity(4);
        let w = p.parse_word("a1 b1 A2").unwrap();
        assert_eq!(id.apply(&w), w);
        let b1_inv = p.parse_word("B1").unwrap();
        assert_eq!(p.format_word(&t_a1.apply(&b1_inv)), "A1 B1");
    }

    #[test]
    fn automorphism_composition_is_substitution_composition() {
        let p = genus2();
        let twists = mcg_generators(2).unwrap();
        let phi = &twists[0];
        let psi = &twists[3];
        let comp = phi.compose(psi);
        for text in ["a1 b1", "b2 A1 b1 a2", "B2 B1 a1"] {
            let w = p.parse_word(text).unwrap();
            assert_eq!(comp.apply(&w), phi.apply(&psi.apply(&w)));
        }
        let report = verify_automorphism(&comp, &p);
        assert!(report.all_ok());
    }

    #[test]
    fn apply_respects_inverses() {
        let p = genus2();
        for phi in mcg_generators(2).unwrap() {
            for text in ["a1 b1 a2", "B1 A2 b2", "a1 a1 b2"] {
                let w = p.parse_word(text).unwrap();
                assert_eq!(phi.apply(&w.inverse()), phi.apply(&w).inverse());
            }
        }
    }

    #[test]
    fn abelianized_action_is_invertible_and_matches_classes() {
        let n = 6u32;
        for (phis, generators) in [
            (mcg_generators(2).unwrap(), 4usize),
            (nielsen_generators(3).unwrap(), 3usize),
        ] {
            for phi in &phis {
                let matrix = phi.abelianized();
                let det = integer_determinant(&matrix);
                assert!(
                    det == 1 || det == -1,
                    "{} has abelianized determinant {det}",
                    phi.label()
                );
                // The class of phi(w) is the matrix image of the class of w.
                let words = ["a1 b1", "a2 A1 a2", "b1 b1 b2"];
                let free_words = ["x1 x2", "x3 X1 x3", "x2 x2 x1"];
                let texts = if generators == 4 { words } else { free_words };
                let p = if generators == 4 {
                    Presentation::surface(2).unwrap()
                } else {
                    Presentation::free(3).unwrap()
                };
                for text in texts {
                    let w = p.parse_word(text).unwrap();
                    let lhs =
                        total_homology_class(&[phi.apply(&w)], generators, n).unwrap();
                    let cw = total_homology_class(&[w], generators, n).unwrap();
                    let mut image = vec![0i64; generators];
                    for (j, col) in matrix.iter().enumerate() {
                        for (i, &entry) in col.iter().enumerate() {
                            image[i] += entry * cw.coords[j] as i64;
                        }
                    }
                    let expected: Vec<u32> = image
                        .iter()
                        .map(|&v| v.rem_euclid(n as i64) as u32)
                        .collect();
                    assert_eq!(lhs.coords, expected, "{}", phi.label());
                }
            }
        }
    }

    #[test]
    fn cyclic_reduction_and_conjugacy() {
        let p = genus2();
        let w = p.parse_word("a1 b1 a2 A1").unwrap();
        // cyclic form is b1 a2 after stripping the a1 ... A1 pair
        assert_eq!(p.format_word(&w.cyclically_reduced()), "b1 a2");
        let v = p.parse_word("a2 b1").unwrap();
        assert!(w.conjugate_to(&v));
        let u = p.parse_word("a2 B1").unwrap();
        assert!(!w.conjugate_to(&u));
    }
}
