"""Built-in sample assessment texts.

SAMPLE_PARAGRAPH is the canonical worked example used throughout the test
suite and as the one-shot exemplar for paragraph generation.  Its first
sentence (two slots, nine variant readings) is the standard small decoding
case.  RECORDING_SCRIPT is a five-slot passage spoken as a single utterance,
whose full option cross product is 3*3*2*3*3 = 162 readings.
"""

SAMPLE_PARAGRAPH = (
    "For <grammar><correct>a</correct>/an/the</grammar> student, "
    "<grammar>study/ studied/<correct>studying</correct></grammar> poetry can be a "
    "roller coaster ride. This journey <grammar><correct>is punctuated</correct>/ "
    "punctuates/ punctuated</grammar> by moments of profound appreciation "
    "<grammar>with/<correct>for</correct>/from</grammar> simpler pieces and "
    "intermittent frustration with more complex works. Some poems <grammar>were/ "
    "have been/<correct>are</correct></grammar> just plain confusing and no amount "
    "of re-reading <grammar>seeming/<correct>seems</correct>/is seeming</grammar> "
    "to help decipher <grammar><correct>the</correct>/an /a</grammar> intended "
    "meaning. The puzzlement <grammar><correct>that</correct>/those/ these</grammar> "
    "results from such <grammar>institutions/<correct>instances</correct>/"
    "instigations</grammar> can be both vexing and "
    "<grammar><correct>demotivating</correct>/motivating/enthusing </grammar>."
)

# One utterance end to end: the date runs straight into the second clause, so
# all five slots vary jointly (162 readings), matching how it is recorded.
RECORDING_SCRIPT = (
    "It <grammar><correct>was</correct>/is/am</grammar> a late afternoon probably "
    "<grammar><correct>on</correct>/in/of</grammar> the 15th of February, 2019 "
    "<grammar>I and my friend/<correct>my friend and I</correct></grammar> "
    "<grammar>was/<correct>were</correct>/will be</grammar> walking on the footpath "
    "<grammar><correct>in</correct>/inside/into</grammar> central Bangalore."
)
