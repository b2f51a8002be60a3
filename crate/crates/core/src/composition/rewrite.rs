//! Structural edits: replacement, refinement and augmentation.

use crate::catalog::Catalog;
use crate::error::{Error, Result};

use super::{bind, Combination};

/// Child indexes from the root. `if` nodes index then=0, else=1; `while`
/// nodes index body=0.
pub type Path = Vec<usize>;

#[derive(Debug, Clone, PartialEq)]
pub enum Edit {
    /// Swap any node for `new`.
    Replace { path: Path, new: Combination },
    /// Replace an atom by a combination of patterns that declare
    /// `refines = <that atom>`.
    Refine { path: Path, new: Combination },
    /// Insert `new` as child `index` of a `seq` or `par`.
    Augment { path: Path, index: usize, new: Combination },
}

pub fn node_at<'a>(comb: &'a Combination, path: &[usize]) -> Option<&'a Combination> {
    match path.split_first() {
        None => Some(comb),
        Some((&i, rest)) => node_at(comb.children().get(i)?, rest),
    }
}

fn child_mut(comb: &mut Combination, i: usize) -> Option<&mut Combination> {
    match comb {
        Combination::Atom(_) => None,
        Combination::Seq(cs) | Combination::Par(cs) => cs.get_mut(i),
        Combination::Cond { then, otherwise, .. } => match i {
            0 => Some(then),
            1 => otherwise.as_deref_mut(),
            _ => None,
        },
        Combination::Iter { body, .. } => (i == 0).then_some(body.as_mut()),
    }
}

fn node_mut<'a>(comb: &'a mut Combination, path: &[usize]) -> Option<&'a mut Combination> {
    match path.split_first() {
        None => Some(comb),
        Some((&i, rest)) => node_mut(child_mut(comb, i)?, rest),
    }
}

/// Applies an edit, returning a new tree; the input is left untouched.
pub fn rewrite(comb: &Combination, edit: &Edit, catalog: &Catalog) -> Result<Combination> {
    let (path, new) = match edit {
        Edit::Replace { path, new } | Edit::Refine { path, new } | Edit::Augment { path, new, .. } => {
            (path, new)
        }
    };
    let new = bind(new, catalog)?;
    let mut out = comb.clone();
    let bad_path = || Error::BadPath(path.clone());
    let target = node_mut(&mut out, path).ok_or_else(bad_path)?;
    match edit {
        Edit::Replace { .. } => *target = new,
        Edit::Refine { .. } => {
            let Combination::Atom(refined) = &*target else {
                return Err(bad_path());
            };
            for atom in new.atoms() {
                let pattern = catalog.pattern(atom)?;
                if pattern.refines.as_deref() != Some(refined.as_str()) {
                    return Err(Error::RefinementMismatch {
                        atom: atom.to_string(),
                        target: refined.clone(),
                    });
                }
            }
            *target = new;
        }
        Edit::Augment { index, .. } => match target {
            Combination::Seq(cs) | Combination::Par(cs) if *index <= cs.len() => cs.insert(*index, new),
            _ => return Err(bad_path()),
        },
    }
    Ok(out)
}
