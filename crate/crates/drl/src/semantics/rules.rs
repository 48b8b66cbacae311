//! The transition rules. Each function validates every precondition before
//! mutating anything, so a failed application leaves the configuration and
//! ledger untouched.

use std::collections::BTreeSet;

use crate::model::{
    ActorAddress, ActorState, Configuration, Fact, KnowledgeSet, Message, Mode, Refob, Token,
};

use super::error::RuleError;
use super::ledger::{Ledger, RefobState};

fn require_internal(k: &Configuration, a: ActorAddress) -> Result<&ActorState, RuleError> {
    k.state(a).ok_or(RuleError::UnknownActor(a))
}

fn require_busy(k: &Configuration, a: ActorAddress) -> Result<(), RuleError> {
    if require_internal(k, a)?.is_busy() {
        Ok(())
    } else {
        Err(RuleError::NotBusy(a))
    }
}

fn require_idle(k: &Configuration, a: ActorAddress) -> Result<(), RuleError> {
    if require_internal(k, a)?.is_idle() {
        Ok(())
    } else {
        Err(RuleError::NotIdle(a))
    }
}

fn require_activated(phi: &KnowledgeSet, refob: &Refob) -> Result<(), RuleError> {
    if phi.has_activated(refob) {
        Ok(())
    } else {
        Err(RuleError::MissingFact(format!("Activated({refob})")))
    }
}

fn knowledge_mut(k: &mut Configuration, a: ActorAddress) -> &mut KnowledgeSet {
    &mut k.state_mut(a).expect("validated actor").knowledge
}

/// A busy parent creates a child actor. The parent immediately owns an
/// active refob to the child; the child starts busy knowing that refob was
/// created plus its own active self-refob.
pub fn spawn(
    k: &mut Configuration,
    ledger: &mut Ledger,
    now: u64,
    token: &Token,
    parent: ActorAddress,
    child: ActorAddress,
) -> Result<(), RuleError> {
    require_busy(k, parent)?;
    if !k.names.token_is_fresh(token) {
        return Err(RuleError::StaleToken(*token));
    }
    if matches!(token, Token::Id { creator, .. } if *creator != parent) {
        return Err(RuleError::MalformedRefob(
            *token,
            "spawn token must be minted by the parent".into(),
        ));
    }
    if !k.names.address_is_fresh(child) {
        return Err(RuleError::StaleAddress(child));
    }

    k.names.claim_token(token);
    k.names.claim_address(child);
    let to_child = Refob::new(*token, parent, child);
    let self_ref = Refob::new(k.names.fresh_token(child), child, child);

    knowledge_mut(k, parent).insert(Fact::Activated(to_child));

    let mut child_knowledge = KnowledgeSet::new();
    child_knowledge.insert(Fact::Created(to_child));
    child_knowledge.insert(Fact::Created(self_ref));
    child_knowledge.insert(Fact::Activated(self_ref));
    k.actors.insert(child, ActorState::busy(child_knowledge));

    ledger.refob_created(to_child, RefobState::Active, now);
    ledger.refob_created(self_ref, RefobState::Active, now);
    Ok(())
}

/// A busy sender posts an application message along one of its refobs,
/// minting a recipient-owned refob for each listed target.
#[allow(clippy::too_many_arguments)]
pub fn send(
    k: &mut Configuration,
    ledger: &mut Ledger,
    now: u64,
    along: &Token,
    using: &[Token],
    created: &[Token],
    sender: ActorAddress,
    recipient: ActorAddress,
    targets: &[ActorAddress],
) -> Result<(), RuleError> {
    require_busy(k, sender)?;
    if using.len() != created.len() || created.len() != targets.len() {
        return Err(RuleError::ArityMismatch);
    }
    let phi = &require_internal(k, sender)?.knowledge;
    let along_refob = Refob::new(*along, sender, recipient);
    require_activated(phi, &along_refob)?;
    let mut used = Vec::with_capacity(using.len());
    for (y, c) in using.iter().zip(targets) {
        let y_refob = Refob::new(*y, sender, *c);
        require_activated(phi, &y_refob)?;
        used.push(y_refob);
    }
    let mut distinct = BTreeSet::new();
    for z in created {
        if !k.names.token_is_fresh(z) || !distinct.insert(*z) {
            return Err(RuleError::StaleToken(*z));
        }
    }

    let mut refs = BTreeSet::new();
    for ((z, c), y_refob) in created.iter().zip(targets).zip(&used) {
        k.names.claim_token(z);
        let z_refob = Refob::new(*z, recipient, *c);
        refs.insert(z_refob);
        ledger.refob_created(z_refob, RefobState::Pending, now);
        knowledge_mut(k, sender).insert(Fact::CreatedUsing(*y_refob, z_refob));
    }
    let sent = knowledge_mut(k, sender).inc_sent(*along);
    ledger.note_sent_count(along, sent, now);

    let message = Message::App {
        along: *along,
        refs,
    };
    ledger.message_sent(recipient, message.clone(), now);
    k.push_message(recipient, message);
    Ok(())
}

/// An idle recipient takes an application message, becoming busy and
/// activating every refob the message carries.
pub fn receive(
    k: &mut Configuration,
    ledger: &mut Ledger,
    now: u64,
    along: &Token,
    recipient: ActorAddress,
    refs: &BTreeSet<Refob>,
) -> Result<(), RuleError> {
    require_idle(k, recipient)?;
    let message = Message::App {
        along: *along,
        refs: refs.clone(),
    };
    if !k.remove_message(recipient, &message) {
        return Err(RuleError::MessageNotQueued(message, recipient));
    }
    ledger.message_delivered(recipient, &message, now);

    let state = k.state_mut(recipient).expect("validated actor");
    state.mode = Mode::Busy;
    let recv = state.knowledge.inc_recv(*along);
    ledger.note_recv_count(along, recv, now);
    for z in refs {
        state.knowledge.insert(Fact::Activated(*z));
        ledger.advance_refob(&z.token, RefobState::Active, now);
    }
    Ok(())
}

/// A busy actor finishes processing and waits for the next message.
pub fn idle(k: &mut Configuration, actor: ActorAddress) -> Result<(), RuleError> {
    require_busy(k, actor)?;
    k.state_mut(actor).expect("validated actor").mode = Mode::Idle;
    Ok(())
}

/// A busy actor tells a refob's target that the refob exists, discharging
/// its created-using obligation.
pub fn send_info(
    k: &mut Configuration,
    ledger: &mut Ledger,
    now: u64,
    using: &Token,
    created: &Refob,
    sender: ActorAddress,
) -> Result<(), RuleError> {
    require_busy(k, sender)?;
    let phi = &require_internal(k, sender)?.knowledge;
    let pair = phi
        .created_using()
        .find(|(x, z)| x.token == *using && z == created)
        .copied();
    let Some((using_refob, created_refob)) = pair else {
        return Err(RuleError::MissingFact(format!(
            "CreatedUsing({using}, {created})"
        )));
    };

    let phi = knowledge_mut(k, sender);
    phi.remove(&Fact::CreatedUsing(using_refob, created_refob));
    let sent = phi.inc_sent(*using);
    ledger.note_sent_count(using, sent, now);

    let message = Message::Info {
        along: *using,
        created: created_refob,
    };
    ledger.message_sent(created_refob.target, message.clone(), now);
    k.push_message(created_refob.target, message);
    Ok(())
}

/// An idle target learns that a refob pointing at it was created. The actor
/// stays idle.
pub fn info(
    k: &mut Configuration,
    ledger: &mut Ledger,
    now: u64,
    along: &Token,
    created: &Refob,
    recipient: ActorAddress,
) -> Result<(), RuleError> {
    require_idle(k, recipient)?;
    if created.target != recipient {
        return Err(RuleError::MalformedRefob(
            created.token,
            format!("info message delivered to {recipient}, not its target"),
        ));
    }
    let message = Message::Info {
        along: *along,
        created: *created,
    };
    if !k.remove_message(recipient, &message) {
        return Err(RuleError::MessageNotQueued(message, recipient));
    }
    ledger.message_delivered(recipient, &message, now);

    let phi = knowledge_mut(k, recipient);
    phi.insert(Fact::Created(*created));
    let recv = phi.inc_recv(*along);
    ledger.note_recv_count(along, recv, now);
    Ok(())
}

/// A busy owner deactivates a refob, shipping the total number of messages
/// it sent along it. Forbidden while any refob created using it has not been
/// announced via an info message.
pub fn send_release(
    k: &mut Configuration,
    ledger: &mut Ledger,
    now: u64,
    token: &Token,
    owner: ActorAddress,
    target: ActorAddress,
) -> Result<(), RuleError> {
    require_busy(k, owner)?;
    let phi = &require_internal(k, owner)?.knowledge;
    let refob = Refob::new(*token, owner, target);
    require_activated(phi, &refob)?;
    if phi.creates_anything_using(&refob) {
        return Err(RuleError::PendingCreatedUsing(*token));
    }
    let count = phi.sent_count(token);

    let phi = knowledge_mut(k, owner);
    phi.remove(&Fact::Activated(refob));
    phi.clear_sent(token);
    ledger.note_sent_count(token, 0, now);
    ledger.advance_refob(token, RefobState::Inactive, now);

    let message = Message::Release {
        token: *token,
        count,
    };
    ledger.message_sent(target, message.clone(), now);
    k.push_message(target, message);
    Ok(())
}

/// An idle target finishes releasing a refob. Only enabled once every
/// message sent along the refob has been received, witnessed by the receive
/// count matching the count in the release message. The actor stays idle.
pub fn release(
    k: &mut Configuration,
    ledger: &mut Ledger,
    now: u64,
    token: &Token,
    owner: ActorAddress,
    target: ActorAddress,
) -> Result<(), RuleError> {
    require_idle(k, target)?;
    let queued = k.mailbox(target).iter().find_map(|m| match m {
        Message::Release { token: t, count } if t == token => Some(*count),
        _ => None,
    });
    let Some(count) = queued else {
        return Err(RuleError::MessageNotQueued(
            Message::Release {
                token: *token,
                count: 0,
            },
            target,
        ));
    };
    let phi = &require_internal(k, target)?.knowledge;
    let actual = phi.recv_count(token);
    if actual != count {
        return Err(RuleError::ReleaseCountMismatch {
            token: *token,
            expected: count,
            actual,
        });
    }

    let message = Message::Release {
        token: *token,
        count,
    };
    k.remove_message(target, &message);
    ledger.message_delivered(target, &message, now);
    knowledge_mut(k, target).insert(Fact::Released(Refob::new(*token, owner, target)));
    ledger.advance_refob(token, RefobState::Released, now);
    Ok(())
}

/// An idle actor drops the created/released pair of a fully released refob,
/// along with its receive count if one is stored. The actor stays idle.
pub fn compaction(
    k: &mut Configuration,
    ledger: &mut Ledger,
    now: u64,
    token: &Token,
    owner: ActorAddress,
    actor: ActorAddress,
) -> Result<(), RuleError> {
    require_idle(k, actor)?;
    let refob = Refob::new(*token, owner, actor);
    let phi = &require_internal(k, actor)?.knowledge;
    if !phi.contains(&Fact::Created(refob)) {
        return Err(RuleError::MissingFact(format!("Created({refob})")));
    }
    if !phi.contains(&Fact::Released(refob)) {
        return Err(RuleError::MissingFact(format!("Released({refob})")));
    }

    let phi = knowledge_mut(k, actor);
    debug_assert!(
        !phi.has_activated(&refob),
        "a released refob cannot still be activated at its owner"
    );
    phi.remove(&Fact::Created(refob));
    phi.remove(&Fact::Released(refob));
    if phi.has_recv_fact(token) {
        phi.clear_recv(token);
        ledger.note_recv_count(token, 0, now);
    }
    Ok(())
}

/// An idle actor records its knowledge. The configuration is unchanged; the
/// caller stores the snapshot.
pub fn snapshot(k: &Configuration, actor: ActorAddress) -> Result<(), RuleError> {
    if !k.state(actor).is_some_and(ActorState::is_idle) {
        return Err(RuleError::NotIdle(actor));
    }
    Ok(())
}

/// The environment sends a receptionist an application message. The
/// receptionist owns the fresh refobs; internal targets must already be
/// receptionists and unknown targets become external actors.
pub fn apply_in(
    k: &mut Configuration,
    ledger: &mut Ledger,
    now: u64,
    recipient: ActorAddress,
    refs: &BTreeSet<Refob>,
) -> Result<(), RuleError> {
    if !k.is_receptionist(recipient) {
        return Err(RuleError::NotReceptionist(recipient));
    }
    for r in refs {
        if r.owner != recipient {
            return Err(RuleError::MalformedRefob(
                r.token,
                format!("environment refob must be owned by {recipient}"),
            ));
        }
        if !k.names.token_is_fresh(&r.token) {
            return Err(RuleError::StaleToken(r.token));
        }
        if k.is_internal(r.target) && !k.is_receptionist(r.target) {
            return Err(RuleError::TargetNotReceptionist(r.target));
        }
    }

    for r in refs {
        k.names.claim_token(&r.token);
        if !k.is_internal(r.target) && !k.is_external(r.target) {
            k.names.claim_address(r.target);
            k.externals.insert(r.target);
        }
        ledger.refob_created(*r, RefobState::Pending, now);
    }
    let message = Message::App {
        along: Token::External,
        refs: refs.clone(),
    };
    ledger.message_sent(recipient, message.clone(), now);
    k.push_message(recipient, message);
    ledger.note_in_event();
    Ok(())
}

/// An application message reaches an external actor. Its internal targets
/// become receptionists; the external world now holds the carried refobs.
pub fn apply_out(
    k: &mut Configuration,
    ledger: &mut Ledger,
    now: u64,
    along: &Token,
    external: ActorAddress,
    refs: &BTreeSet<Refob>,
) -> Result<(), RuleError> {
    if !k.is_external(external) {
        return Err(RuleError::NotExternal(external));
    }
    let message = Message::App {
        along: *along,
        refs: refs.clone(),
    };
    if !k.remove_message(external, &message) {
        return Err(RuleError::MessageNotQueued(message, external));
    }
    ledger.message_delivered(external, &message, now);
    for r in refs {
        if k.is_internal(r.target) {
            k.receptionists.insert(r.target);
        }
        ledger.advance_refob(&r.token, RefobState::Active, now);
    }
    Ok(())
}

/// An external actor absorbs a release message. External actors do not run
/// the protocol, so the refob never reaches the released state.
pub fn release_out(
    k: &mut Configuration,
    ledger: &mut Ledger,
    now: u64,
    token: &Token,
    external: ActorAddress,
) -> Result<(), RuleError> {
    if !k.is_external(external) {
        return Err(RuleError::NotExternal(external));
    }
    let queued = k.mailbox(external).iter().find_map(|m| match m {
        Message::Release { token: t, count } if t == token => Some(*count),
        _ => None,
    });
    let Some(count) = queued else {
        return Err(RuleError::MessageNotQueued(
            Message::Release {
                token: *token,
                count: 0,
            },
            external,
        ));
    };
    let message = Message::Release {
        token: *token,
        count,
    };
    k.remove_message(external, &message);
    ledger.message_delivered(external, &message, now);
    Ok(())
}

/// An external actor absorbs an info message.
pub fn info_out(
    k: &mut Configuration,
    ledger: &mut Ledger,
    now: u64,
    along: &Token,
    created: &Refob,
    external: ActorAddress,
) -> Result<(), RuleError> {
    if !k.is_external(external) {
        return Err(RuleError::NotExternal(external));
    }
    let message = Message::Info {
        along: *along,
        created: *created,
    };
    if !k.remove_message(external, &message) {
        return Err(RuleError::MessageNotQueued(message, external));
    }
    ledger.message_delivered(external, &message, now);
    Ok(())
}
