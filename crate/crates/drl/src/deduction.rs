//! The derivation relation over knowledge sets.
//!
//! A knowledge set derives more than it stores: missing count facts default
//! to zero, a created-using fact witnesses creation of its second refob, and
//! unreleased-ness is the absence of a release fact alongside evidence of
//! creation. Queries capture exactly these derivable judgments.

use serde::{Deserialize, Serialize};

use crate::model::{KnowledgeSet, Refob, Token};

/// A judgment that a knowledge set may or may not derive.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum Query {
    Created(Refob),
    Released(Refob),
    /// Created with no release fact; never stored, always derived.
    Unreleased(Refob),
    Activated(Refob),
    CreatedUsing(Refob, Refob),
    SentCount(Token, u64),
    RecvCount(Token, u64),
}

/// Whether the knowledge set derives the query.
pub fn derives(phi: &KnowledgeSet, query: &Query) -> bool {
    match query {
        Query::Created(r) => derives_created(phi, r),
        Query::Released(r) => phi.has_released(r),
        Query::Unreleased(r) => derives_created(phi, r) && !phi.has_released(r),
        Query::Activated(r) => phi.has_activated(r),
        Query::CreatedUsing(x, z) => phi.contains(&crate::model::Fact::CreatedUsing(*x, *z)),
        Query::SentCount(t, n) => phi.sent_count(t) == *n,
        Query::RecvCount(t, n) => phi.recv_count(t) == *n,
    }
}

fn derives_created(phi: &KnowledgeSet, refob: &Refob) -> bool {
    phi.created().any(|r| r == refob) || phi.created_using().any(|(_, z)| z == refob)
}

/// Every refob whose creation the set derives, literally or via a
/// created-using fact.
pub fn derivably_created(phi: &KnowledgeSet) -> impl Iterator<Item = Refob> + '_ {
    let literal = phi.created().copied();
    let via_using = phi.created_using().map(|(_, z)| *z);
    let mut seen = std::collections::BTreeSet::new();
    literal.chain(via_using).filter(move |r| seen.insert(*r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ActorAddress, Fact};

    fn refob(owner: u32, target: u32, seq: u32) -> Refob {
        Refob::new(
            Token::id(ActorAddress(owner), seq),
            ActorAddress(owner),
            ActorAddress(target),
        )
    }

    #[test]
    fn empty_set_derives_zero_counts() {
        let phi = KnowledgeSet::new();
        let t = Token::id(ActorAddress(0), 0);
        assert!(derives(&phi, &Query::SentCount(t, 0)));
        assert!(derives(&phi, &Query::RecvCount(t, 0)));
        assert!(!derives(&phi, &Query::SentCount(t, 1)));
    }

    #[test]
    fn stored_count_shadows_default() {
        let mut phi = KnowledgeSet::new();
        let t = Token::id(ActorAddress(0), 0);
        phi.insert(Fact::SentCount(t, 2));
        assert!(derives(&phi, &Query::SentCount(t, 2)));
        assert!(!derives(&phi, &Query::SentCount(t, 0)));
    }

    #[test]
    fn created_using_witnesses_creation_of_second_component() {
        let mut phi = KnowledgeSet::new();
        let x = refob(1, 3, 0);
        let z = refob(2, 3, 1);
        phi.insert(Fact::CreatedUsing(x, z));
        assert!(derives(&phi, &Query::Created(z)));
        assert!(!derives(&phi, &Query::Created(x)));
        assert!(derives(&phi, &Query::Unreleased(z)));
    }

    #[test]
    fn unreleased_needs_creation_and_no_release() {
        let mut phi = KnowledgeSet::new();
        let r = refob(1, 2, 0);
        assert!(!derives(&phi, &Query::Unreleased(r)));
        phi.insert(Fact::Created(r));
        assert!(derives(&phi, &Query::Unreleased(r)));
        phi.insert(Fact::Released(r));
        assert!(!derives(&phi, &Query::Unreleased(r)));
        assert!(derives(&phi, &Query::Created(r)));
    }

    #[test]
    fn derivably_created_deduplicates() {
        let mut phi = KnowledgeSet::new();
        let x = refob(1, 3, 0);
        let z = refob(2, 3, 1);
        phi.insert(Fact::Created(z));
        phi.insert(Fact::CreatedUsing(x, z));
        assert_eq!(derivably_created(&phi).count(), 1);
    }
}
